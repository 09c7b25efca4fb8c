#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <unistd.h>
#include <string>
#include <vector>

#include "dendsom/datasets.hpp"
#include "dendsom/random.hpp"

namespace testing {

namespace fs = std::filesystem;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = fs::temp_directory_path() /
                ("dendsom-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

inline void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline std::vector<std::uint8_t> read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

inline std::vector<std::uint8_t> idx_images(std::uint32_t count, std::uint32_t rows, std::uint32_t cols,
                                            const std::vector<std::uint8_t>& pixels,
                                            std::uint32_t magic = 0x00000803) {
    std::vector<std::uint8_t> out;
    put_be32(out, magic);
    put_be32(out, count);
    put_be32(out, rows);
    put_be32(out, cols);
    out.insert(out.end(), pixels.begin(), pixels.end());
    return out;
}

inline std::vector<std::uint8_t> idx_labels(const std::vector<std::uint8_t>& labels,
                                            std::uint32_t magic = 0x00000801) {
    std::vector<std::uint8_t> out;
    put_be32(out, magic);
    put_be32(out, static_cast<std::uint32_t>(labels.size()));
    out.insert(out.end(), labels.begin(), labels.end());
    return out;
}

/// One CIFAR-10 record with constant R, G and B planes.
inline std::vector<std::uint8_t> cifar_record(std::uint8_t label, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    std::vector<std::uint8_t> rec{label};
    rec.insert(rec.end(), 1024, r);
    rec.insert(rec.end(), 1024, g);
    rec.insert(rec.end(), 1024, b);
    return rec;
}

/// Small synthetic image set: each label lights up its own block of an
/// otherwise dim image, plus uniform noise. Learnable, balanced, 10 labels.
inline dendsom::LabeledDataset synthetic_digits(std::size_t per_label, std::uint64_t seed, std::size_t side = 12,
                                                dendsom::Split split = dendsom::Split::train) {
    dendsom::Rng rng(seed);
    const std::size_t n = per_label * 10;
    std::vector<double> pixels;
    std::vector<int> labels;
    pixels.reserve(n * side * side);
    for (std::size_t i = 0; i < n; ++i) {
        const int label = static_cast<int>(i % 10);
        labels.push_back(label);
        const std::size_t br = static_cast<std::size_t>(label / 5) * (side / 2);
        const std::size_t bc = static_cast<std::size_t>(label % 5) * (side / 5);
        for (std::size_t r = 0; r < side; ++r)
            for (std::size_t c = 0; c < side; ++c) {
                const bool lit = r >= br && r < br + side / 2 && c >= bc && c < bc + side / 5;
                pixels.push_back(lit ? 0.7 + 0.3 * rng.uniform01() : 0.2 * rng.uniform01());
            }
    }
    return dendsom::LabeledDataset("synthetic", split, side, side, std::move(pixels), std::move(labels));
}

}  // namespace testing

namespace fs = std::filesystem;
