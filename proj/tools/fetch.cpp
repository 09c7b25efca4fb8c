#include "fetch.hpp"

#include <curl/curl.h>
#include <openssl/evp.h>
#include <zlib.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <mutex>

#include "dendsom/error.hpp"
#include "dendsom/log.hpp"

namespace dendsom::fetch {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Transport

namespace {

std::size_t collect(char* data, std::size_t size, std::size_t n, void* user) {
    auto* out = static_cast<Bytes*>(user);
    out->insert(out->end(), data, data + size * n);
    return size * n;
}

void global_init() {
    static std::once_flag once;
    std::call_once(once, [] { curl_global_init(CURL_GLOBAL_DEFAULT); });
}

}  // namespace

Bytes download(const std::string& url) {
    global_init();
    CURL* h = curl_easy_init();
    if (!h) throw IoError("curl initialization failed");
    Bytes out;
    char err[CURL_ERROR_SIZE] = {};
    curl_easy_setopt(h, CURLOPT_URL, url.c_str());
    curl_easy_setopt(h, CURLOPT_FOLLOWLOCATION, 1L);
    curl_easy_setopt(h, CURLOPT_FAILONERROR, 1L);
    curl_easy_setopt(h, CURLOPT_WRITEFUNCTION, collect);
    curl_easy_setopt(h, CURLOPT_WRITEDATA, &out);
    curl_easy_setopt(h, CURLOPT_ERRORBUFFER, err);
    curl_easy_setopt(h, CURLOPT_CONNECTTIMEOUT, 30L);
    const CURLcode rc = curl_easy_perform(h);
    curl_easy_cleanup(h);
    if (rc != CURLE_OK)
        throw IoError("download of '" + url + "' failed: " + (err[0] ? err : curl_easy_strerror(rc)));
    return out;
}

// ---------------------------------------------------------------------------
// Archives

Bytes gunzip(std::span<const std::uint8_t> gz) {
    z_stream zs{};
    if (inflateInit2(&zs, 15 + 16) != Z_OK) throw IoError("zlib initialization failed");
    zs.next_in = const_cast<Bytef*>(gz.data());
    zs.avail_in = static_cast<uInt>(gz.size());
    Bytes out;
    std::uint8_t chunk[1 << 16];
    int rc = Z_OK;
    while (rc != Z_STREAM_END) {
        zs.next_out = chunk;
        zs.avail_out = sizeof chunk;
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            throw TruncatedFile("gzip stream is corrupt or truncated");
        }
        out.insert(out.end(), chunk, chunk + (sizeof chunk - zs.avail_out));
        if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
            inflateEnd(&zs);
            throw TruncatedFile("gzip stream ends early");
        }
    }
    inflateEnd(&zs);
    return out;
}

namespace {

std::uint64_t octal(const std::uint8_t* p, std::size_t n) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < n && p[i] != 0 && p[i] != ' '; ++i) {
        if (p[i] < '0' || p[i] > '7') throw InvalidArgument("bad octal field in tar header");
        v = v * 8 + (p[i] - '0');
    }
    return v;
}

std::string field(const std::uint8_t* p, std::size_t n) {
    std::size_t len = 0;
    while (len < n && p[len] != 0) ++len;
    return std::string(reinterpret_cast<const char*>(p), len);
}

}  // namespace

std::vector<TarEntry> untar(std::span<const std::uint8_t> tar) {
    std::vector<TarEntry> out;
    std::size_t pos = 0;
    while (pos + 512 <= tar.size()) {
        const std::uint8_t* h = tar.data() + pos;
        if (std::all_of(h, h + 512, [](std::uint8_t b) { return b == 0; })) break;
        const std::string name = field(h, 100);
        const std::string prefix = field(h + 345, 155);
        const std::uint64_t size = octal(h + 124, 12);
        const char type = static_cast<char>(h[156]);
        pos += 512;
        if (size > tar.size() - pos) throw TruncatedFile("tar entry '" + name + "' runs past the archive end");
        if (type == '0' || type == '\0') {
            TarEntry e;
            e.name = prefix.empty() ? name : prefix + "/" + name;
            e.data.assign(tar.begin() + static_cast<std::ptrdiff_t>(pos),
                          tar.begin() + static_cast<std::ptrdiff_t>(pos + size));
            out.push_back(std::move(e));
        }
        pos += (size + 511) / 512 * 512;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Digests

namespace {

std::string digest(std::span<const std::uint8_t> bytes, const EVP_MD* md) {
    unsigned char buf[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), buf, &len, md, nullptr) != 1)
        throw IoError("digest computation failed");
    std::string hex;
    char two[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(two, sizeof two, "%02x", buf[i]);
        hex += two;
    }
    return hex;
}

}  // namespace

std::string sha256_hex(std::span<const std::uint8_t> bytes) { return digest(bytes, EVP_sha256()); }
std::string md5_hex(std::span<const std::uint8_t> bytes) { return digest(bytes, EVP_md5()); }

Manifest parse_manifest(std::string_view text) {
    Manifest m;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
        if (line.empty() || line.front() == '#') continue;
        const auto sp = line.find_first_of(" \t");
        if (sp != 64) throw ConfigError("manifest line '" + std::string(line) + "' is not '<sha256>  <file>'");
        std::string_view name = line.substr(sp);
        name.remove_prefix(std::min(name.find_first_not_of(" \t*"), name.size()));
        if (name.empty()) throw ConfigError("manifest line '" + std::string(line) + "' names no file");
        m[std::string(name)] = std::string(line.substr(0, 64));
    }
    return m;
}

Manifest pinned_sha256(DatasetId id) {
    if (id != DatasetId::mnist) return {};
    return {
        {"train-images-idx3-ubyte", "ba891046e6505d7aadcbbe25680a0738ad16aec93bde7f9b65e87a2fc25776db"},
        {"train-labels-idx1-ubyte", "65a50cbbf4e906d70832878ad85ccda5333a97f0f4c3dd2ef09a8a9eef7101c5"},
        {"t10k-images-idx3-ubyte", "0fa7898d509279e482958e8ce81c8e77db3f2f8254e26661ceb7762c4d494ce7"},
        {"t10k-labels-idx1-ubyte", "ff7bcfd416de33731a308c3f266cc351222c34898ecbeaf847f06e48f7ec33f2"},
    };
}

// ---------------------------------------------------------------------------
// Datasets

namespace {

struct Source {
    std::string remote;    // file name on the host
    std::string md5;       // archive digest published by the canonical host
};

struct DatasetSource {
    std::string host;
    std::vector<Source> files;
    bool tarball = false;
};

DatasetSource source_for(DatasetId id) {
    switch (id) {
        case DatasetId::mnist:
            return {"https://ossci-datasets.s3.amazonaws.com/mnist/",
                    {{"train-images-idx3-ubyte.gz", "f68b3c2dcbeaaa9fbdd348bbdeb94873"},
                     {"train-labels-idx1-ubyte.gz", "d53e105ee54ea40749a09fcbcd1e9432"},
                     {"t10k-images-idx3-ubyte.gz", "9fb629c4189551a2d022fa330f9573f3"},
                     {"t10k-labels-idx1-ubyte.gz", "ec29112dd5afa0611ce80d1b7f02629c"}},
                    false};
        case DatasetId::fashion:
            return {"http://fashion-mnist.s3-website.eu-central-1.amazonaws.com/",
                    {{"train-images-idx3-ubyte.gz", "8d4fb7e6c68d591d4c3dfef9ec88bf0d"},
                     {"train-labels-idx1-ubyte.gz", "25c81989df183df01b3e8a0aad5dffbe"},
                     {"t10k-images-idx3-ubyte.gz", "bef4ecab320f06d8554ea6380940ec79"},
                     {"t10k-labels-idx1-ubyte.gz", "bb300cfdad3c16e7a12a480ee83cd310"}},
                    false};
        case DatasetId::cifar10:
            return {"https://www.cs.toronto.edu/~kriz/",
                    {{"cifar-10-binary.tar.gz", "c32a1d4ab5d03f1284b67883e8d87530"}},
                    true};
    }
    throw InvalidArgument("unknown dataset");
}

void check(const std::string& what, const std::string& expected, const std::string& actual) {
    if (expected != actual)
        throw ChecksumMismatch(what + ": expected " + expected + ", got " + actual);
}

void write_bytes(const fs::path& path, const Bytes& bytes) {
    fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".part";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write '" + tmp.string() + "'");
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw IoError("write to '" + tmp.string() + "' failed");
    }
    fs::rename(tmp, path);
}

}  // namespace

FetchReport fetch_dataset(DatasetId id, const FetchOptions& options) {
    const auto source = source_for(id);
    const bool canonical = options.base_url.empty();
    std::string base = canonical ? source.host : options.base_url;
    if (!base.empty() && base.back() != '/') base += '/';

    Manifest pins = pinned_sha256(id);
    for (const auto& [k, v] : options.manifest) pins[k] = v;

    std::vector<fs::path> targets;
    for (const auto& split : {Split::train, Split::test})
        for (const auto& f : dataset_files(id, split)) targets.push_back(options.data_dir / f);

    FetchReport report;
    if (!options.overwrite && std::all_of(targets.begin(), targets.end(), [](const fs::path& p) { return fs::exists(p); })) {
        report.skipped = targets;
        return report;
    }

    // name in canonical layout -> contents; everything is verified before any write
    std::vector<std::pair<fs::path, Bytes>> staged;
    for (const auto& src : source.files) {
        const std::string url = base + src.remote;
        log::info("fetching " + url);
        const Bytes archive = download(url);
        if (canonical) check(src.remote + " md5", src.md5, md5_hex(archive));
        Bytes raw = gunzip(archive);
        if (!source.tarball) {
            const std::string name = src.remote.substr(0, src.remote.size() - 3);
            staged.emplace_back(options.data_dir / (id == DatasetId::mnist ? "mnist" : "fashion") / name,
                                std::move(raw));
            continue;
        }
        for (auto& entry : untar(raw)) {
            const std::string name = fs::path(entry.name).filename().string();
            if (!name.ends_with(".bin")) continue;
            staged.emplace_back(options.data_dir / "cifar10" / name, std::move(entry.data));
        }
    }

    for (const auto& target : targets) {
        const bool present = std::any_of(staged.begin(), staged.end(),
                                         [&](const auto& s) { return s.first == target; });
        if (!present) throw IoError("download did not provide '" + target.filename().string() + "'");
    }
    for (const auto& [path, bytes] : staged) {
        const auto pin = pins.find(path.filename().string());
        if (pin != pins.end()) check(path.filename().string() + " sha256", pin->second, sha256_hex(bytes));
    }
    for (const auto& [path, bytes] : staged) {
        write_bytes(path, bytes);
        report.written.push_back(path);
    }
    return report;
}

}  // namespace dendsom::fetch
