#include <doctest.h>

#include <zlib.h>

#include <cstring>
#include <string>

#include "dendsom/error.hpp"
#include "fetch.hpp"
#include "support.hpp"

using namespace dendsom;
using fetch::Bytes;

namespace {

Bytes gzip(const Bytes& raw) {
    z_stream z{};
    REQUIRE(deflateInit2(&z, Z_DEFAULT_COMPRESSION, Z_DEFLATED, 15 + 16, 8, Z_DEFAULT_STRATEGY) == Z_OK);
    Bytes out(deflateBound(&z, raw.size()) + 32);
    z.next_in = const_cast<Bytef*>(raw.data());
    z.avail_in = static_cast<uInt>(raw.size());
    z.next_out = out.data();
    z.avail_out = static_cast<uInt>(out.size());
    REQUIRE(deflate(&z, Z_FINISH) == Z_STREAM_END);
    out.resize(z.total_out);
    deflateEnd(&z);
    return out;
}

void tar_header(Bytes& tar, const std::string& name, std::size_t size, char type = '0') {
    std::uint8_t h[512] = {};
    std::memcpy(h, name.data(), name.size());
    std::snprintf(reinterpret_cast<char*>(h + 124), 12, "%011zo", size);
    h[156] = static_cast<std::uint8_t>(type);
    std::memcpy(h + 257, "ustar", 5);
    std::memset(h + 148, ' ', 8);
    unsigned sum = 0;
    for (auto b : h) sum += b;
    std::snprintf(reinterpret_cast<char*>(h + 148), 8, "%06o", sum);
    tar.insert(tar.end(), h, h + 512);
}

void tar_file(Bytes& tar, const std::string& name, const Bytes& data) {
    tar_header(tar, name, data.size());
    tar.insert(tar.end(), data.begin(), data.end());
    tar.resize((tar.size() + 511) / 512 * 512, 0);
}

std::string file_url(const fs::path& dir) { return "file://" + fs::absolute(dir).string() + "/"; }

}  // namespace

TEST_SUITE("fetch") {

TEST_CASE("digests") {
    const Bytes abc{'a', 'b', 'c'};
    CHECK(fetch::sha256_hex(abc) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(fetch::md5_hex(abc) == "900150983cd24fb0d6963f7d28e17f72");
    CHECK(fetch::sha256_hex({}) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("gunzip inverts gzip") {
    Bytes raw(100000);
    Rng rng(2);
    for (auto& b : raw) b = static_cast<std::uint8_t>(rng.below(7));
    CHECK(fetch::gunzip(gzip(raw)) == raw);
    CHECK(fetch::gunzip(gzip({})).empty());
    const Bytes junk{1, 2, 3, 4, 5};
    CHECK_THROWS_AS(fetch::gunzip(junk), Error);
}

TEST_CASE("untar returns regular files in order") {
    Bytes tar;
    tar_header(tar, "dir/", 0, '5');
    tar_file(tar, "dir/a.bin", {1, 2, 3});
    tar_file(tar, "dir/b.txt", Bytes(600, 9));
    tar.resize(tar.size() + 1024, 0);
    const auto entries = fetch::untar(tar);
    REQUIRE(entries.size() == 2);
    CHECK(entries[0].name == "dir/a.bin");
    CHECK(entries[0].data == Bytes{1, 2, 3});
    CHECK(entries[1].data == Bytes(600, 9));
}

TEST_CASE("manifest") {
    const auto m = fetch::parse_manifest(
        "# pins\n"
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad  a.bin\n\n");
    REQUIRE(m.size() == 1);
    CHECK(m.at("a.bin").starts_with("ba7816bf"));
    CHECK_THROWS_AS(fetch::parse_manifest("xyz  a.bin\n"), ConfigError);
    CHECK(fetch::pinned_sha256(DatasetId::mnist).size() == 4);
}

TEST_CASE("fetch_dataset from a local mirror") {
    testing::TempDir mirror("mirror");
    testing::TempDir out("fetched");
    const Bytes images = testing::idx_images(2, 28, 28, std::vector<std::uint8_t>(2 * 784, 7));
    const Bytes labels = testing::idx_labels({1, 2});
    for (const char* prefix : {"train", "t10k"}) {
        testing::write_bytes(mirror / (std::string(prefix) + "-images-idx3-ubyte.gz"), gzip(images));
        testing::write_bytes(mirror / (std::string(prefix) + "-labels-idx1-ubyte.gz"), gzip(labels));
    }

    fetch::FetchOptions o;
    o.data_dir = out.path();
    o.base_url = file_url(mirror.path());

    SUBCASE("a wrong pin writes nothing") {
        o.manifest["t10k-labels-idx1-ubyte"] = std::string(64, '0');
        CHECK_THROWS_AS(fetch::fetch_dataset(DatasetId::fashion, o), ChecksumMismatch);
        CHECK_FALSE(fs::exists(out / "fashion"));
    }
    SUBCASE("matching pins unpack into the canonical layout") {
        o.manifest["t10k-labels-idx1-ubyte"] = fetch::sha256_hex(labels);
        const auto r = fetch::fetch_dataset(DatasetId::fashion, o);
        CHECK(r.written.size() == 4);
        const auto d = load_dataset(DatasetId::fashion, Split::test, out.path());
        CHECK(d.size() == 2);
        CHECK(d.label(1) == 2);
        const auto again = fetch::fetch_dataset(DatasetId::fashion, o);
        CHECK(again.written.empty());
        CHECK(again.skipped.size() == 4);
    }
    SUBCASE("built-in pins reject a fake MNIST") {
        CHECK_THROWS_AS(fetch::fetch_dataset(DatasetId::mnist, o), ChecksumMismatch);
        CHECK_FALSE(fs::exists(out / "mnist"));
    }
    SUBCASE("missing files are an io error") {
        CHECK_THROWS_AS(fetch::fetch_dataset(DatasetId::cifar10, o), IoError);
    }
}

TEST_CASE("CIFAR tarball unpacking") {
    testing::TempDir mirror("cifar-mirror");
    testing::TempDir out("cifar-out");
    Bytes tar;
    const auto rec = testing::cifar_record(3, 1, 2, 3);
    for (const char* n : {"data_batch_1.bin", "data_batch_2.bin", "data_batch_3.bin", "data_batch_4.bin",
                          "data_batch_5.bin", "test_batch.bin"})
        tar_file(tar, std::string("cifar-10-batches-bin/") + n, rec);
    tar_file(tar, "cifar-10-batches-bin/readme.html", {'x'});
    tar.resize(tar.size() + 1024, 0);
    testing::write_bytes(mirror / "cifar-10-binary.tar.gz", gzip(tar));

    fetch::FetchOptions o;
    o.data_dir = out.path();
    o.base_url = file_url(mirror.path());
    const auto r = fetch::fetch_dataset(DatasetId::cifar10, o);
    CHECK(r.written.size() == 6);
    CHECK_FALSE(fs::exists(out / "cifar10" / "readme.html"));
    CHECK(load_dataset(DatasetId::cifar10, Split::train, out.path()).size() == 5);
}

TEST_CASE("local MNIST matches the built-in pins" *
          doctest::skip(!fs::exists(fs::path(DENDSOM_DEFAULT_DATA_DIR) / "mnist" / "train-labels-idx1-ubyte"))) {
    for (const auto& [name, sha] : fetch::pinned_sha256(DatasetId::mnist))
        CHECK(fetch::sha256_hex(testing::read_bytes(fs::path(DENDSOM_DEFAULT_DATA_DIR) / "mnist" / name)) == sha);
}

}
