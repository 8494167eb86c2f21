#include "cellnet/data.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>

namespace cellnet {

namespace {

class GzReader {
public:
    explicit GzReader(const std::filesystem::path& path) : file_(gzopen(path.c_str(), "rb"), &gzclose) {
        if (!file_) throw DataError("cannot open " + path.string());
    }

    void read(void* dst, std::size_t bytes, const char* what) {
        std::size_t done = 0;
        auto* out = static_cast<unsigned char*>(dst);
        while (done < bytes) {
            const auto chunk = static_cast<unsigned>(std::min<std::size_t>(bytes - done, 1u << 30));
            const int got = gzread(file_.get(), out + done, chunk);
            if (got < 0) throw IdxError(std::string("read error in ") + what, offset_ + done);
            if (got == 0) throw IdxError(std::string("truncated file while reading ") + what, offset_ + done);
            done += static_cast<std::size_t>(got);
        }
        offset_ += bytes;
    }

    std::uint32_t read_be32(const char* what) {
        std::array<unsigned char, 4> b{};
        read(b.data(), b.size(), what);
        return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) | b[3];
    }

    std::uint64_t offset() const { return offset_; }

private:
    std::unique_ptr<gzFile_s, int (*)(gzFile)> file_;
    std::uint64_t offset_ = 0;
};

IdxHeader read_header(GzReader& in, std::uint32_t expected_magic, std::uint8_t expected_rank) {
    IdxHeader header;
    header.magic = in.read_be32("magic");
    if (header.magic != expected_magic) {
        std::ostringstream msg;
        msg << "bad IDX magic 0x" << std::hex << header.magic << ", expected 0x" << expected_magic;
        throw IdxError(msg.str(), 0);
    }
    header.type_code = static_cast<std::uint8_t>((header.magic >> 8) & 0xff);
    header.rank = static_cast<std::uint8_t>(header.magic & 0xff);
    if (header.type_code != 0x08) throw IdxError("unsupported IDX element type", 2);
    if (header.rank != expected_rank) throw IdxError("unexpected IDX rank", 3);
    for (std::uint8_t r = 0; r < header.rank; ++r) header.dims.push_back(in.read_be32("dimension size"));
    return header;
}

void put_be32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>((v >> 24) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>(v & 0xff));
}

void write_bytes(const std::filesystem::path& path, const std::string& bytes, bool gzip) {
    if (gzip) {
        std::unique_ptr<gzFile_s, int (*)(gzFile)> f(gzopen(path.c_str(), "wb"), &gzclose);
        if (!f) throw DataError("cannot write " + path.string());
        if (gzwrite(f.get(), bytes.data(), static_cast<unsigned>(bytes.size())) != static_cast<int>(bytes.size()))
            throw DataError("short write to " + path.string());
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cell.push_back('"');
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cell.push_back(ch);
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            cells.push_back(cell);
            cell.clear();
        } else if (ch != '\r') {
            cell.push_back(ch);
        }
    }
    cells.push_back(cell);
    return cells;
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
}

}  // namespace

IdxImages read_idx_images(const std::filesystem::path& path) {
    GzReader in(path);
    const auto header = read_header(in, kIdxImagesMagic, 3);
    IdxImages images;
    images.rows = header.dims[1];
    images.cols = header.dims[2];
    images.pixels.resize(std::size_t{header.dims[0]} * images.rows * images.cols);
    in.read(images.pixels.data(), images.pixels.size(), "pixel data");
    return images;
}

std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path) {
    GzReader in(path);
    const auto header = read_header(in, kIdxLabelsMagic, 1);
    std::vector<std::uint8_t> labels(header.dims[0]);
    in.read(labels.data(), labels.size(), "label data");
    return labels;
}

void write_idx_images(const std::filesystem::path& path, const IdxImages& images, bool gzip) {
    std::string bytes;
    put_be32(bytes, kIdxImagesMagic);
    put_be32(bytes, static_cast<std::uint32_t>(images.count()));
    put_be32(bytes, images.rows);
    put_be32(bytes, images.cols);
    bytes.append(images.pixels.begin(), images.pixels.end());
    write_bytes(path, bytes, gzip);
}

void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels, bool gzip) {
    std::string bytes;
    put_be32(bytes, kIdxLabelsMagic);
    put_be32(bytes, static_cast<std::uint32_t>(labels.size()));
    bytes.append(labels.begin(), labels.end());
    write_bytes(path, bytes, gzip);
}

Dataset load_mnist(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
    const auto images = read_idx_images(images_path);
    const auto labels = read_idx_labels(labels_path);
    if (images.count() != labels.size())
        throw DataError("image count " + std::to_string(images.count()) + " does not match label count " +
                        std::to_string(labels.size()));
    if (labels.empty()) throw DataError("empty dataset");

    const Eigen::Index d = Eigen::Index{images.rows} * images.cols;
    const auto n = static_cast<Eigen::Index>(labels.size());
    Dataset out;
    out.features = Eigen::Map<const Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>>(
                       images.pixels.data(), d, n)
                       .cast<double>() /
                   255.0;
    out.targets.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto label = labels[static_cast<std::size_t>(i)];
        if (label > 9) throw IdxError("label out of range 0..9", 8 + static_cast<std::uint64_t>(i));
        out.targets[i] = label;
    }
    return out;
}

CsvTable load_csv(const std::filesystem::path& path, const std::string& label_column) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw DataError("empty dataset: " + path.string() + " has no header");
    auto header = split_csv_line(line);
    for (auto& h : header) h = trim(h);

    const auto label_it = std::find(header.begin(), header.end(), label_column);
    if (label_it == header.end()) {
        std::string available;
        for (const auto& h : header) available += (available.empty() ? "" : ", ") + h;
        throw DataError("label column '" + label_column + "' not found; available columns: " + available);
    }
    const auto label_index = static_cast<std::size_t>(label_it - header.begin());

    CsvTable table;
    table.label_name = label_column;
    for (std::size_t c = 0; c < header.size(); ++c)
        if (c != label_index) table.feature_names.push_back(header[c]);

    std::vector<double> values;
    std::vector<double> targets;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw DataError("ragged row at line " + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " cells, got " + std::to_string(cells.size()));
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const auto text = trim(cells[c]);
            double v = 0;
            const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
            if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
                throw DataError("non-numeric cell '" + text + "' at line " + std::to_string(line_no) + ", column " +
                                header[c]);
            if (c == label_index)
                targets.push_back(v);
            else
                values.push_back(v);
        }
    }
    if (targets.empty()) throw DataError("empty dataset: " + path.string() + " has no data rows");

    const auto n = static_cast<Eigen::Index>(targets.size());
    const auto d = static_cast<Eigen::Index>(table.feature_names.size());
    table.data.features = Eigen::Map<const Eigen::MatrixXd>(values.data(), d, n);
    table.data.targets = Eigen::Map<const Eigen::VectorXd>(targets.data(), n);
    return table;
}

void write_csv(const std::filesystem::path& path, const Dataset& data, const std::string& label_column) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out.precision(17);
    for (Eigen::Index j = 0; j < data.dimensions(); ++j) out << 'x' << j << ',';
    out << label_column << '\n';
    for (Eigen::Index n = 0; n < data.size(); ++n) {
        for (Eigen::Index j = 0; j < data.dimensions(); ++j) out << data.features(j, n) << ',';
        out << data.targets[n] << '\n';
    }
}

SynthKind synth_kind_from_string(const std::string& text) {
    if (text == "linear") return SynthKind::linear;
    if (text == "piecewise_linear") return SynthKind::piecewise_linear;
    if (text == "two_gaussians") return SynthKind::two_gaussians;
    if (text == "xor_blobs") return SynthKind::xor_blobs;
    throw std::invalid_argument("unknown synthetic kind '" + text + "'");
}

Dataset synth(const SynthOptions& opt) {
    if (opt.n < 1 || opt.d < 1) throw std::invalid_argument("synth needs n >= 1 and d >= 1");
    std::mt19937_64 rng(opt.rng_seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto noise = [&] { return opt.noise_sigma > 0 ? opt.noise_sigma * gauss(rng) : 0.0; };
    auto affine = [](const Eigen::VectorXd& beta, const auto& x) { return beta[0] + beta.tail(x.size()).dot(x); };

    Dataset out;
    out.features.resize(opt.d, opt.n);
    out.targets.resize(opt.n);

    switch (opt.kind) {
        case SynthKind::linear: {
            Eigen::VectorXd beta(opt.d + 1);
            for (auto& b : beta) b = gauss(rng);
            for (Eigen::Index n = 0; n < opt.n; ++n) {
                for (Eigen::Index j = 0; j < opt.d; ++j) out.features(j, n) = unit(rng);
                out.targets[n] = affine(beta, out.features.col(n)) + noise();
            }
            break;
        }
        case SynthKind::piecewise_linear: {
            if (opt.regions < 1) throw std::invalid_argument("piecewise_linear needs at least one region");
            Eigen::MatrixXd seeds(opt.d, opt.regions);
            Eigen::MatrixXd betas(opt.d + 1, opt.regions);
            for (auto& s : seeds.reshaped()) s = unit(rng);
            for (auto& b : betas.reshaped()) b = gauss(rng);
            for (Eigen::Index n = 0; n < opt.n; ++n) {
                for (Eigen::Index j = 0; j < opt.d; ++j) out.features(j, n) = unit(rng);
                Eigen::Index region = 0;
                (seeds.colwise() - out.features.col(n)).colwise().squaredNorm().minCoeff(&region);
                out.targets[n] = affine(Eigen::VectorXd(betas.col(region)), out.features.col(n)) + noise();
            }
            break;
        }
        case SynthKind::two_gaussians: {
            for (Eigen::Index n = 0; n < opt.n; ++n) {
                const bool positive = (n % 2) == 0;
                for (Eigen::Index j = 0; j < opt.d; ++j) out.features(j, n) = (positive ? 5.0 : -5.0) + noise();
                out.targets[n] = positive ? 1.0 : 0.0;
            }
            break;
        }
        case SynthKind::xor_blobs: {
            for (Eigen::Index n = 0; n < opt.n; ++n) {
                const int blob = static_cast<int>(n % 4);
                const double sx = (blob & 1) ? 2.0 : -2.0;
                const double sy = (blob & 2) ? 2.0 : -2.0;
                for (Eigen::Index j = 0; j < opt.d; ++j) out.features(j, n) = noise();
                if (opt.d == 1) {
                    // 1-D analogue: alternating labels at -3, -1, 1, 3
                    out.features(0, n) += -3.0 + 2.0 * blob;
                    out.targets[n] = (blob % 2) ? 1.0 : 0.0;
                } else {
                    out.features(0, n) += sx;
                    out.features(1, n) += sy;
                    out.targets[n] = ((sx > 0) != (sy > 0)) ? 1.0 : 0.0;
                }
            }
            break;
        }
    }
    return out;
}

std::vector<int> integer_labels(const Dataset& data) {
    std::vector<int> labels(static_cast<std::size_t>(data.size()));
    for (Eigen::Index n = 0; n < data.size(); ++n) {
        const double t = data.targets[n];
        if (t != std::round(t)) throw DataError("label at index " + std::to_string(n) + " is not an integer");
        labels[static_cast<std::size_t>(n)] = static_cast<int>(t);
    }
    return labels;
}

}  // namespace cellnet
