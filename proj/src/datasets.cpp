#include "dendsom/datasets.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <numeric>

#include "dendsom/error.hpp"
#include "dendsom/random.hpp"

namespace dendsom {

namespace fs = std::filesystem;

std::string_view to_string(Split split) { return split == Split::train ? "train" : "test"; }

Grayscale parse_grayscale(std::string_view name) {
    if (name == "luma") return Grayscale::luma;
    if (name == "mean") return Grayscale::mean;
    throw InvalidArgument("unknown grayscale mode '" + std::string(name) + "' (expected luma|mean)");
}

std::string_view to_string(Grayscale g) { return g == Grayscale::luma ? "luma" : "mean"; }

LabeledDataset::LabeledDataset(std::string name, Split split, std::size_t rows, std::size_t cols,
                               std::vector<double> pixels, std::vector<int> labels, int n_labels)
    : name_(std::move(name)),
      split_(split),
      rows_(rows),
      cols_(cols),
      pixels_(std::move(pixels)),
      labels_(std::move(labels)),
      n_labels_(n_labels) {
    if (rows_ == 0 || cols_ == 0) throw InvalidArgument("dataset images need positive dimensions");
    if (n_labels_ <= 0) throw InvalidArgument("dataset needs a positive label count");
    if (pixels_.size() != labels_.size() * image_size())
        throw CountMismatch("pixel buffer holds " + std::to_string(pixels_.size()) +
                            " values, expected " + std::to_string(labels_.size() * image_size()));
    for (int l : labels_)
        if (l < 0 || l >= n_labels_)
            throw InvalidArgument("label " + std::to_string(l) + " outside [0, " +
                                  std::to_string(n_labels_) + ")");
}

// ---------------------------------------------------------------------------
// SampleView

SampleView::SampleView(const LabeledDataset& data) : data_(&data), indices_(data.size()) {
    std::iota(indices_.begin(), indices_.end(), std::size_t{0});
}

SampleView::SampleView(const LabeledDataset& data, std::vector<std::size_t> indices)
    : data_(&data), indices_(std::move(indices)) {
    for (std::size_t i : indices_)
        if (i >= data.size()) throw InvalidArgument("sample index out of range");
}

SampleView SampleView::relabeled(std::vector<int> mapping) const {
    SampleView out = *this;
    if (!remap_.empty()) {
        // compose with the existing mapping
        std::vector<int> composed(remap_.size(), -1);
        for (std::size_t l = 0; l < remap_.size(); ++l) {
            const int mid = remap_[l];
            if (mid >= 0 && static_cast<std::size_t>(mid) < mapping.size()) composed[l] = mapping[mid];
        }
        mapping = std::move(composed);
    }
    for (std::size_t i : indices_) {
        const int l = data_->label(i);
        if (static_cast<std::size_t>(l) >= mapping.size() || mapping[l] < 0)
            throw InvalidArgument("relabel mapping does not cover label " + std::to_string(l));
    }
    out.remap_ = std::move(mapping);
    return out;
}

SampleView SampleView::shuffled(std::uint64_t seed) const {
    SampleView out = *this;
    const auto perm = permutation(indices_.size(), seed);
    for (std::size_t i = 0; i < perm.size(); ++i) out.indices_[i] = indices_[perm[i]];
    return out;
}

SampleView SampleView::prefix(std::size_t n) const {
    if (n > indices_.size()) throw InvalidArgument("prefix longer than view");
    SampleView out = *this;
    out.indices_.resize(n);
    return out;
}

std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = rng.below(i);
        std::swap(perm[i - 1], perm[j]);
    }
    return perm;
}

LabeledDataset shuffle(const LabeledDataset& dataset, std::uint64_t seed) {
    const auto perm = permutation(dataset.size(), seed);
    const std::size_t n = dataset.image_size();
    std::vector<double> pixels(dataset.pixels().size());
    std::vector<int> labels(dataset.size());
    for (std::size_t i = 0; i < perm.size(); ++i) {
        const auto src = dataset.image(perm[i]);
        std::copy(src.begin(), src.end(), pixels.begin() + static_cast<std::ptrdiff_t>(i * n));
        labels[i] = dataset.label(perm[i]);
    }
    return LabeledDataset(dataset.name(), dataset.split(), dataset.rows(), dataset.cols(),
                          std::move(pixels), std::move(labels), dataset.n_labels());
}

// ---------------------------------------------------------------------------
// File formats

namespace {

std::vector<unsigned char> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& buf, std::size_t offset) {
    return (std::uint32_t{buf[offset]} << 24) | (std::uint32_t{buf[offset + 1]} << 16) |
           (std::uint32_t{buf[offset + 2]} << 8) | std::uint32_t{buf[offset + 3]};
}

std::string hex32(std::uint32_t v) {
    char s[11];
    std::snprintf(s, sizeof s, "0x%08X", v);
    return s;
}

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;
constexpr std::size_t kCifarSide = 32;
constexpr std::size_t kCifarPlane = kCifarSide * kCifarSide;
constexpr std::size_t kCifarRecord = 1 + 3 * kCifarPlane;

}  // namespace

LabeledDataset load_idx(const fs::path& images_path, const fs::path& labels_path, std::string name,
                        Split split) {
    const auto img = read_file(images_path);
    if (img.size() < 16) throw TruncatedFile("'" + images_path.string() + "' is shorter than the IDX header");
    if (const auto magic = read_be32(img, 0); magic != kIdxImagesMagic)
        throw MagicMismatch("'" + images_path.string() + "' has magic " + hex32(magic) + ", expected " +
                            hex32(kIdxImagesMagic));
    const std::size_t count = read_be32(img, 4);
    const std::size_t rows = read_be32(img, 8);
    const std::size_t cols = read_be32(img, 12);
    const std::size_t needed = 16 + count * rows * cols;
    if (img.size() < needed)
        throw TruncatedFile("'" + images_path.string() + "' holds " + std::to_string(img.size()) +
                            " bytes, header promises " + std::to_string(needed));

    const auto lab = read_file(labels_path);
    if (lab.size() < 8) throw TruncatedFile("'" + labels_path.string() + "' is shorter than the IDX header");
    if (const auto magic = read_be32(lab, 0); magic != kIdxLabelsMagic)
        throw MagicMismatch("'" + labels_path.string() + "' has magic " + hex32(magic) + ", expected " +
                            hex32(kIdxLabelsMagic));
    const std::size_t label_count = read_be32(lab, 4);
    if (lab.size() < 8 + label_count)
        throw TruncatedFile("'" + labels_path.string() + "' holds fewer labels than its header promises");
    if (label_count != count)
        throw CountMismatch("images file holds " + std::to_string(count) + " samples, labels file " +
                            std::to_string(label_count));

    std::vector<double> pixels(count * rows * cols);
    for (std::size_t i = 0; i < pixels.size(); ++i) pixels[i] = img[16 + i] / 255.0;
    std::vector<int> labels(count);
    for (std::size_t i = 0; i < count; ++i) labels[i] = lab[8 + i];
    return LabeledDataset(std::move(name), split, rows, cols, std::move(pixels), std::move(labels));
}

LabeledDataset load_cifar10(std::span<const fs::path> batch_paths, Grayscale grayscale,
                            std::string name, Split split) {
    std::vector<double> pixels;
    std::vector<int> labels;
    for (const auto& path : batch_paths) {
        const auto buf = read_file(path);
        if (buf.empty() || buf.size() % kCifarRecord != 0)
            throw BadRecordSize("'" + path.string() + "' is " + std::to_string(buf.size()) +
                                " bytes, not a positive multiple of " + std::to_string(kCifarRecord));
        const std::size_t records = buf.size() / kCifarRecord;
        pixels.reserve(pixels.size() + records * kCifarPlane);
        for (std::size_t r = 0; r < records; ++r) {
            const unsigned char* rec = buf.data() + r * kCifarRecord;
            labels.push_back(rec[0]);
            const unsigned char* red = rec + 1;
            const unsigned char* green = red + kCifarPlane;
            const unsigned char* blue = green + kCifarPlane;
            for (std::size_t p = 0; p < kCifarPlane; ++p) {
                const double y = grayscale == Grayscale::luma
                                     ? 0.299 * red[p] + 0.587 * green[p] + 0.114 * blue[p]
                                     : (static_cast<double>(red[p]) + green[p] + blue[p]) / 3.0;
                pixels.push_back(y / 255.0);
            }
        }
    }
    return LabeledDataset(std::move(name), split, kCifarSide, kCifarSide, std::move(pixels),
                          std::move(labels));
}

// ---------------------------------------------------------------------------
// Canonical layout

DatasetId parse_dataset(std::string_view name) {
    if (name == "mnist") return DatasetId::mnist;
    if (name == "fashion" || name == "fashion-mnist" || name == "mnist-fashion") return DatasetId::fashion;
    if (name == "cifar10" || name == "cifar-10") return DatasetId::cifar10;
    throw InvalidArgument("unknown dataset '" + std::string(name) + "' (expected mnist|fashion|cifar10)");
}

std::string_view to_string(DatasetId id) {
    switch (id) {
        case DatasetId::mnist: return "mnist";
        case DatasetId::fashion: return "fashion";
        case DatasetId::cifar10: return "cifar10";
    }
    return "?";
}

std::vector<fs::path> dataset_files(DatasetId id, Split split) {
    if (id == DatasetId::cifar10) {
        if (split == Split::test) return {fs::path("cifar10") / "test_batch.bin"};
        std::vector<fs::path> out;
        for (int b = 1; b <= 5; ++b) out.push_back(fs::path("cifar10") / ("data_batch_" + std::to_string(b) + ".bin"));
        return out;
    }
    const fs::path dir = id == DatasetId::mnist ? "mnist" : "fashion";
    const std::string prefix = split == Split::train ? "train" : "t10k";
    return {dir / (prefix + "-images-idx3-ubyte"), dir / (prefix + "-labels-idx1-ubyte")};
}

LabeledDataset load_dataset(DatasetId id, Split split, const fs::path& data_dir, Grayscale grayscale) {
    auto files = dataset_files(id, split);
    for (auto& f : files) {
        f = data_dir / f;
        if (!fs::exists(f)) throw IoError("missing data file '" + f.string() + "'");
    }
    const std::string name(to_string(id));
    if (id == DatasetId::cifar10) return load_cifar10(files, grayscale, name, split);
    return load_idx(files[0], files[1], name, split);
}

}  // namespace dendsom
