#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dendsom {

enum class Split { train, test };

std::string_view to_string(Split split);

/// Channel reduction applied to color records.
/// `luma` is ITU-R BT.601 (0.299 R + 0.587 G + 0.114 B); `mean` averages the channels.
enum class Grayscale { luma, mean };

Grayscale parse_grayscale(std::string_view name);
std::string_view to_string(Grayscale g);

/// Immutable in-memory image set. Pixels are stored contiguously, one
/// rows*cols block per image, values in [0, 1].
class LabeledDataset {
public:
    LabeledDataset() = default;
    LabeledDataset(std::string name, Split split, std::size_t rows, std::size_t cols,
                   std::vector<double> pixels, std::vector<int> labels, int n_labels = 10);

    const std::string& name() const noexcept { return name_; }
    Split split() const noexcept { return split_; }
    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t image_size() const noexcept { return rows_ * cols_; }
    std::size_t size() const noexcept { return labels_.size(); }
    bool empty() const noexcept { return labels_.empty(); }
    int n_labels() const noexcept { return n_labels_; }

    std::span<const double> image(std::size_t i) const {
        return {pixels_.data() + i * image_size(), image_size()};
    }
    int label(std::size_t i) const { return labels_[i]; }
    std::span<const int> labels() const noexcept { return labels_; }
    std::span<const double> pixels() const noexcept { return pixels_; }

    friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;

private:
    std::string name_;
    Split split_ = Split::train;
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> pixels_;
    std::vector<int> labels_;
    int n_labels_ = 10;
};

/// Ordered, optionally relabeled selection of samples from a dataset. The
/// dataset must outlive the view.
class SampleView {
public:
    SampleView() = default;
    explicit SampleView(const LabeledDataset& data);
    SampleView(const LabeledDataset& data, std::vector<std::size_t> indices);

    std::size_t size() const noexcept { return indices_.size(); }
    bool empty() const noexcept { return indices_.empty(); }
    std::span<const double> image(std::size_t i) const { return data_->image(indices_[i]); }
    int label(std::size_t i) const {
        const int l = data_->label(indices_[i]);
        return remap_.empty() ? l : remap_[static_cast<std::size_t>(l)];
    }
    std::size_t source_index(std::size_t i) const { return indices_[i]; }
    const std::vector<std::size_t>& indices() const noexcept { return indices_; }
    const LabeledDataset& dataset() const { return *data_; }

    /// Same samples with labels passed through `mapping` (indexed by original
    /// label). Every label present in the view must map to a non-negative value.
    SampleView relabeled(std::vector<int> mapping) const;

    /// Same samples in a seeded permutation.
    SampleView shuffled(std::uint64_t seed) const;

    /// First n samples.
    SampleView prefix(std::size_t n) const;

private:
    const LabeledDataset* data_ = nullptr;
    std::vector<std::size_t> indices_;
    std::vector<int> remap_;
};

/// Deterministic Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed);

/// Reads an IDX image file (magic 0x00000803) and label file (0x00000801).
/// Pixels are divided by 255.
LabeledDataset load_idx(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path, std::string name = "idx",
                        Split split = Split::train);

/// Reads CIFAR-10 binary batches (3073-byte records, plane-ordered RGB) and
/// converts each record to a 32x32 grayscale image divided by 255.
LabeledDataset load_cifar10(std::span<const std::filesystem::path> batch_paths,
                            Grayscale grayscale = Grayscale::luma, std::string name = "cifar10",
                            Split split = Split::train);

/// Permuted copy; image-label pairing preserved.
LabeledDataset shuffle(const LabeledDataset& dataset, std::uint64_t seed);

/// Canonical dataset layout under a data directory:
///   mnist/{train,t10k}-{images-idx3,labels-idx1}-ubyte
///   fashion/{train,t10k}-{images-idx3,labels-idx1}-ubyte
///   cifar10/data_batch_{1..5}.bin, cifar10/test_batch.bin
enum class DatasetId { mnist, fashion, cifar10 };

DatasetId parse_dataset(std::string_view name);
std::string_view to_string(DatasetId id);

/// Files that make up one split of a dataset, relative to the data directory.
std::vector<std::filesystem::path> dataset_files(DatasetId id, Split split);

LabeledDataset load_dataset(DatasetId id, Split split, const std::filesystem::path& data_dir,
                            Grayscale grayscale = Grayscale::luma);

}  // namespace dendsom
