#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dendsom/datasets.hpp"

namespace dendsom::fetch {

using Bytes = std::vector<std::uint8_t>;

/// Whole resource at `url` (http, https or file).
Bytes download(const std::string& url);

/// Decompresses a gzip stream.
Bytes gunzip(std::span<const std::uint8_t> gz);

struct TarEntry {
    std::string name;
    Bytes data;
};

/// Regular files of a POSIX ustar archive, in archive order.
std::vector<TarEntry> untar(std::span<const std::uint8_t> tar);

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string md5_hex(std::span<const std::uint8_t> bytes);

/// Expected digests keyed by file name. Manifest text holds one
/// "<sha256>  <filename>" line per file; '#' lines are ignored.
using Manifest = std::map<std::string, std::string, std::less<>>;
Manifest parse_manifest(std::string_view text);

/// SHA-256 of the canonical uncompressed MNIST files.
Manifest pinned_sha256(DatasetId id);

struct FetchOptions {
    std::filesystem::path data_dir = "data";
    /// Replaces the dataset's canonical host. Archive checksums pinned for
    /// the canonical host are skipped; file digests still apply.
    std::string base_url;
    /// Extra SHA-256 pins for the written files, on top of the built-in ones.
    Manifest manifest;
    bool overwrite = false;
};

struct FetchReport {
    std::vector<std::filesystem::path> written;
    std::vector<std::filesystem::path> skipped;  // already present
};

/// Downloads, verifies and unpacks one dataset into the canonical layout.
/// Throws ChecksumMismatch on any digest mismatch and writes nothing then.
FetchReport fetch_dataset(DatasetId id, const FetchOptions& options);

}  // namespace dendsom::fetch
