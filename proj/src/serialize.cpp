#include "cellnet/serialize.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <json.hpp>

#include <fstream>
#include <sstream>

namespace cellnet {

namespace {

using nlohmann::json;

void append_number(std::string& out, double v) { out += fmt::format("{:.17g}", v); }

template <typename Derived>
void append_array(std::string& out, const Eigen::DenseBase<Derived>& values) {
    out += '[';
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        if (i) out += ", ";
        append_number(out, values(i));
    }
    out += ']';
}

template <typename Derived>
void append_columns(std::string& out, const Eigen::MatrixBase<Derived>& m, std::string_view indent) {
    out += "[\n";
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        out += indent;
        out += "  ";
        append_array(out, m.col(c));
        out += c + 1 < m.cols() ? ",\n" : "\n";
    }
    out += indent;
    out += ']';
}

void append_network(std::string& out, const CellularNetworkd& net, std::string_view indent) {
    validate(net);
    out += "{\n";
    out += fmt::format("{}  \"format_version\": {},\n", indent, kFormatVersion);
    out += fmt::format("{}  \"mode\": \"{}\",\n", indent, to_string(net.mode));
    out += fmt::format("{}  \"dimensions\": {},\n", indent, net.dimensions());
    out += fmt::format("{}  \"cells\": {},\n", indent, net.cells());
    out += fmt::format("{}  \"alphas\": ", indent);
    append_array(out, net.alphas);
    out += fmt::format(",\n{}  \"centers\": ", indent);
    append_columns(out, net.centers, std::string(indent) + "  ");
    out += fmt::format(",\n{}  \"betas\": ", indent);
    append_columns(out, net.betas, std::string(indent) + "  ");
    out += fmt::format("\n{}}}", indent);
}

const json& require(const json& doc, const char* field) {
    const auto it = doc.find(field);
    if (it == doc.end()) throw ParseError(field, "missing field");
    return *it;
}

std::int64_t require_int(const json& doc, const char* field) {
    const auto& v = require(doc, field);
    if (!v.is_number_integer()) throw ParseError(field, "expected an integer");
    return v.get<std::int64_t>();
}

double number_at(const json& v, const std::string& field) {
    if (!v.is_number()) throw ParseError(field, "expected a number");
    return v.get<double>();
}

void check_version(const json& doc) {
    const auto version = require_int(doc, "format_version");
    if (version != kFormatVersion)
        throw ParseError("format_version", fmt::format("unsupported version {} (expected {})", version, kFormatVersion));
}

Eigen::MatrixXd read_rows(const json& doc, const char* field, std::int64_t rows, std::int64_t width) {
    const auto& arr = require(doc, field);
    if (!arr.is_array()) throw ParseError(field, "expected an array");
    if (static_cast<std::int64_t>(arr.size()) != rows)
        throw ParseError(field, fmt::format("shape mismatch: {} rows for {} cells", arr.size(), rows));
    Eigen::MatrixXd out(width, rows);
    for (std::int64_t r = 0; r < rows; ++r) {
        const auto& row = arr[static_cast<std::size_t>(r)];
        const std::string where = fmt::format("{}[{}]", field, r);
        if (!row.is_array()) throw ParseError(where, "expected an array");
        if (static_cast<std::int64_t>(row.size()) != width)
            throw ParseError(where, fmt::format("shape mismatch: {} values, expected {}", row.size(), width));
        for (std::int64_t c = 0; c < width; ++c)
            out(c, r) = number_at(row[static_cast<std::size_t>(c)], fmt::format("{}[{}]", where, c));
    }
    return out;
}

CellularNetworkd network_from_doc(const json& doc) {
    if (!doc.is_object()) throw ParseError("", "model document must be an object");
    check_version(doc);
    const auto& mode = require(doc, "mode");
    if (!mode.is_string()) throw ParseError("mode", "expected a string");
    CellularNetworkd net;
    try {
        net.mode = mode_from_string(mode.get<std::string>());
    } catch (const std::invalid_argument& e) {
        throw ParseError("mode", e.what());
    }
    const auto d = require_int(doc, "dimensions");
    const auto k = require_int(doc, "cells");
    if (d < 1) throw ParseError("dimensions", "must be positive");
    if (k < 1) throw ParseError("cells", "must be positive");

    const auto& alphas = require(doc, "alphas");
    if (!alphas.is_array()) throw ParseError("alphas", "expected an array");
    if (static_cast<std::int64_t>(alphas.size()) != k)
        throw ParseError("alphas", fmt::format("shape mismatch: {} values for {} cells", alphas.size(), k));
    net.alphas.resize(k);
    for (std::int64_t i = 0; i < k; ++i) {
        const double a = number_at(alphas[static_cast<std::size_t>(i)], fmt::format("alphas[{}]", i));
        if (!(a > 0)) throw ParseError(fmt::format("alphas[{}]", i), "alpha must be positive");
        net.alphas[i] = a;
    }
    net.centers = read_rows(doc, "centers", k, d);
    net.betas = read_rows(doc, "betas", k, d + 1);
    try {
        validate(net);
    } catch (const std::invalid_argument& e) {
        throw ParseError("", e.what());
    }
    return net;
}

OvrModel ovr_from_doc(const json& doc) {
    check_version(doc);
    const auto& classes = require(doc, "classes");
    const auto& models = require(doc, "models");
    if (!classes.is_array()) throw ParseError("classes", "expected an array");
    if (!models.is_array()) throw ParseError("models", "expected an array");
    if (classes.size() != models.size())
        throw ParseError("models", fmt::format("{} models for {} classes", models.size(), classes.size()));
    if (models.empty()) throw ParseError("models", "bundle is empty");

    OvrModel model;
    for (std::size_t c = 0; c < classes.size(); ++c) {
        if (!classes[c].is_number_integer()) throw ParseError(fmt::format("classes[{}]", c), "expected an integer");
        model.classes.push_back(classes[c].get<int>());
        try {
            model.networks.push_back(network_from_doc(models[c]));
        } catch (const ParseError& e) {
            throw ParseError(fmt::format("models[{}]", c), e.what());
        }
        if (model.networks.back().mode != Mode::binary)
            throw ParseError(fmt::format("models[{}].mode", c), "OvR members must be binary");
        if (model.networks.back().dimensions() != model.networks.front().dimensions())
            throw ParseError(fmt::format("models[{}].dimensions", c), "inconsistent dimensions in bundle");
    }
    return model;
}

json parse(std::string_view text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError("", std::string("malformed model document: ") + e.what());
    }
}

bool is_bundle(const json& doc) { return doc.is_object() && doc.contains("kind") && doc["kind"] == "ovr"; }

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

}  // namespace

std::string to_json(const CellularNetworkd& net) {
    std::string out;
    append_network(out, net, "");
    out += '\n';
    return out;
}

std::string to_json(const OvrModel& model) {
    if (model.classes.size() != model.networks.size()) throw std::invalid_argument("classes/networks size mismatch");
    std::string out = "{\n";
    out += fmt::format("  \"format_version\": {},\n", kFormatVersion);
    out += "  \"kind\": \"ovr\",\n";
    out += fmt::format("  \"classes\": [{}],\n", fmt::join(model.classes, ", "));
    out += "  \"models\": [\n";
    for (std::size_t c = 0; c < model.networks.size(); ++c) {
        out += "    ";
        append_network(out, model.networks[c], "    ");
        out += c + 1 < model.networks.size() ? ",\n" : "\n";
    }
    out += "  ]\n}\n";
    return out;
}

CellularNetworkd network_from_json(std::string_view text) {
    const auto doc = parse(text);
    if (is_bundle(doc)) throw ParseError("kind", "document is an OvR bundle, not a single network");
    return network_from_doc(doc);
}

OvrModel ovr_from_json(std::string_view text) {
    const auto doc = parse(text);
    if (!is_bundle(doc)) throw ParseError("kind", "document is not an OvR bundle");
    return ovr_from_doc(doc);
}

ModelFile model_from_json(std::string_view text) {
    const auto doc = parse(text);
    if (is_bundle(doc)) return ovr_from_doc(doc);
    return network_from_doc(doc);
}

ModelFile load_model(const std::filesystem::path& path) { return model_from_json(read_file(path)); }

void save_model(const std::filesystem::path& path, const CellularNetworkd& net) { write_file(path, to_json(net)); }

void save_model(const std::filesystem::path& path, const OvrModel& model) { write_file(path, to_json(model)); }

}  // namespace cellnet
