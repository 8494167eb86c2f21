#pragma once

#include "cellnet/trainer.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

namespace cellnet {

inline constexpr int kFormatVersion = 1;

/// Rejected model document; `field` names the offending key (may be empty).
class ParseError : public std::runtime_error {
public:
    ParseError(std::string field, const std::string& what)
        : std::runtime_error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

/// JSON model document with every number written to 17 significant digits.
std::string to_json(const CellularNetworkd& net);
CellularNetworkd network_from_json(std::string_view text);

/// OvR bundle: {"format_version", "kind": "ovr", "classes", "models": [...]}.
std::string to_json(const OvrModel& model);
OvrModel ovr_from_json(std::string_view text);

using ModelFile = std::variant<CellularNetworkd, OvrModel>;

ModelFile model_from_json(std::string_view text);
ModelFile load_model(const std::filesystem::path& path);
void save_model(const std::filesystem::path& path, const CellularNetworkd& net);
void save_model(const std::filesystem::path& path, const OvrModel& model);

}  // namespace cellnet
