#pragma once

#include "cellnet/model.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cellnet {

class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed IDX input; `offset` is the byte position where parsing failed.
class IdxError : public DataError {
public:
    IdxError(const std::string& what, std::uint64_t offset)
        : DataError(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
    std::uint64_t offset() const { return offset_; }

private:
    std::uint64_t offset_;
};

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

struct IdxHeader {
    std::uint32_t magic = 0;
    std::uint8_t type_code = 0;
    std::uint8_t rank = 0;
    std::vector<std::uint32_t> dims;
};

struct IdxImages {
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    std::vector<std::uint8_t> pixels;  // count * rows * cols, row-major per image
    std::size_t count() const { return rows * cols == 0 ? 0 : pixels.size() / (rows * cols); }
};

/// IDX readers accept plain or gzip-compressed files.
IdxImages read_idx_images(const std::filesystem::path& path);
std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path);

void write_idx_images(const std::filesystem::path& path, const IdxImages& images, bool gzip = false);
void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels, bool gzip = false);

/// Images flattened row-major into columns and scaled to [0, 1]; targets hold
/// the digit labels.
Dataset load_mnist(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

struct CsvTable {
    std::vector<std::string> feature_names;
    std::string label_name;
    Dataset data;
};

CsvTable load_csv(const std::filesystem::path& path, const std::string& label_column);
void write_csv(const std::filesystem::path& path, const Dataset& data, const std::string& label_column = "target");

enum class SynthKind { linear, piecewise_linear, two_gaussians, xor_blobs };

SynthKind synth_kind_from_string(const std::string& text);

struct SynthOptions {
    SynthKind kind = SynthKind::linear;
    Eigen::Index n = 100;
    Eigen::Index d = 2;
    double noise_sigma = 0.0;
    std::uint64_t rng_seed = 0;
    int regions = 3;  // piecewise_linear only
};

/// Deterministic synthetic fixtures.
///
/// linear / piecewise_linear: features uniform in [-1, 1]^d, targets from one
/// random affine function (or one per nearest-seed region of `regions` random
/// seeds) plus Gaussian noise. two_gaussians: label 1 around (+5, ..., +5),
/// label 0 around (-5, ..., -5), spread noise_sigma. xor_blobs: four blobs at
/// (+-2, +-2, 0, ...) labelled by the XOR of the first two signs.
Dataset synth(const SynthOptions& options);

/// Labels stored in a dataset's targets, as integers.
std::vector<int> integer_labels(const Dataset& data);

}  // namespace cellnet
