#include <doctest.h>

#include <cstring>

#include "dendsom/error.hpp"
#include "dendsom/pmi.hpp"
#include "dendsom/snapshot.hpp"
#include "support.hpp"

using namespace dendsom;

namespace {

DendSomModel trained(std::uint64_t seed) {
    ModelSpec s;
    s.tiling = TilingSpec::square(12, 5, 3);
    s.unit_rows = 3;
    s.unit_cols = 4;
    s.schedule.sigma0 = 2;
    s.schedule.lambda = 80;
    s.schedule.r_exp = 2;
    s.bmu = BmuRule::euclidean;
    auto m = DendSomModel::create(s, seed);
    const auto data = testing::synthetic_digits(5, seed);
    fit(m, SampleView(data).shuffled(seed));
    return m;
}

}  // namespace

TEST_SUITE("snapshot") {

TEST_CASE("grid round trip is exact") {
    Rng rng(5);
    const auto g = SomGrid::random(3, 2, 7, rng);
    ScheduleParams params;
    params.sigma0 = 1.25;
    DecaySchedule s(params, 99);
    const auto bytes = encode_grid(g, s);
    CHECK(std::memcmp(bytes.data(), kSnapshotMagic, 8) == 0);
    const auto back = decode_grid(bytes);
    CHECK(back.grid == g);
    CHECK(back.schedule == s);
    CHECK(encode_grid(back.grid, back.schedule) == bytes);
}

TEST_CASE("model round trip preserves predictions") {
    const auto m = trained(3);
    testing::TempDir dir("snap");
    save_model(m, dir / "m.bin");
    const auto back = load_model(dir / "m.bin");
    CHECK(back == m);
    CHECK(back.bmu_rule() == BmuRule::euclidean);
    CHECK(back.schedule().params().r_exp == 2);
    const auto test = testing::synthetic_digits(3, 77);
    for (std::size_t i = 0; i < test.size(); ++i) {
        const auto a = predict(m, test.image(i), all_labels(10));
        const auto b = predict(back, test.image(i), all_labels(10));
        CHECK(a.label == b.label);
        CHECK(a.scores == b.scores);
    }
    // resumed training matches uninterrupted training
    auto x = m;
    auto y = back;
    const auto more = testing::synthetic_digits(2, 8);
    fit(x, SampleView(more));
    fit(y, SampleView(more));
    CHECK(x == y);
}

TEST_CASE("corrupt snapshots are rejected") {
    const auto bytes = encode_model(trained(1));

    auto bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_AS(decode_model(bad), MagicMismatch);

    for (std::size_t cut : {std::size_t{4}, std::size_t{12}, std::size_t{40}, bytes.size() / 2, bytes.size() - 1}) {
        const std::span<const std::uint8_t> head(bytes.data(), cut);
        CHECK_THROWS_AS(decode_model(head), TruncatedFile);
    }

    auto trailing = bytes;
    trailing.push_back(0);
    CHECK_THROWS_AS(decode_model(trailing), InvalidArgument);

    DecaySchedule s;
    const auto grid = encode_grid(SomGrid(2, 2, 2), s);
    CHECK_THROWS_AS(decode_model(grid), InvalidArgument);
    CHECK_THROWS_AS(decode_grid(bytes), InvalidArgument);

    testing::TempDir dir("snap-missing");
    CHECK_THROWS_AS(load_model(dir / "nope.bin"), IoError);
}

}
