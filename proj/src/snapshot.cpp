#include "dendsom/snapshot.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "dendsom/error.hpp"

namespace dendsom {

namespace fs = std::filesystem;

namespace {

static_assert(std::endian::native == std::endian::little, "snapshot codec assumes a little-endian host");

constexpr std::uint32_t kGridRecord = 1;
constexpr std::uint32_t kModelRecord = 2;

class Writer {
public:
    Writer() { bytes_.insert(bytes_.end(), std::begin(kSnapshotMagic), std::end(kSnapshotMagic)); }

    template <class T>
    void put(T v) {
        const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
        bytes_.insert(bytes_.end(), p, p + sizeof(T));
    }
    void u64(std::uint64_t v) { put(v); }
    void f64(double v) { put(v); }

    std::vector<std::uint8_t> take() { return std::move(bytes_); }

private:
    std::vector<std::uint8_t> bytes_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {
        const std::size_t n = std::min(bytes.size(), sizeof kSnapshotMagic);
        if (std::memcmp(bytes.data(), kSnapshotMagic, n) != 0)
            throw MagicMismatch("snapshot does not start with DENDSOM1");
        if (n < sizeof kSnapshotMagic) throw TruncatedFile("snapshot ends inside its magic");
        pos_ = sizeof kSnapshotMagic;
    }

    template <class T>
    T get() {
        if (bytes_.size() - pos_ < sizeof(T)) throw TruncatedFile("snapshot ends early");
        T v;
        std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    std::uint64_t u64() { return get<std::uint64_t>(); }
    double f64() { return get<double>(); }

    std::size_t remaining() const { return bytes_.size() - pos_; }

    void expect_end() const {
        if (pos_ != bytes_.size()) throw InvalidArgument("snapshot has trailing bytes");
    }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

void put_schedule(Writer& w, const DecaySchedule& s) {
    w.f64(s.params().alpha0);
    w.f64(s.params().sigma0);
    w.f64(s.params().lambda);
    w.f64(s.params().alpha_crit);
    w.put<std::uint32_t>(s.params().r_exp);
    w.u64(s.t());
}

DecaySchedule get_schedule(Reader& r) {
    ScheduleParams p;
    p.alpha0 = r.f64();
    p.sigma0 = r.f64();
    p.lambda = r.f64();
    p.alpha_crit = r.f64();
    p.r_exp = r.get<std::uint32_t>();
    const std::uint64_t t = r.u64();
    return DecaySchedule(p, t);
}

std::vector<double> get_reals(Reader& r, std::uint64_t n) {
    if (n > r.remaining() / sizeof(double)) throw TruncatedFile("snapshot ends inside a weight block");
    std::vector<double> v(n);
    for (auto& x : v) x = r.f64();
    return v;
}

std::size_t checked_size(std::uint64_t v) {
    if (v == 0 || v > (std::uint64_t{1} << 32)) throw InvalidArgument("implausible size field in snapshot");
    return static_cast<std::size_t>(v);
}

std::vector<std::uint8_t> read_all(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_all(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace

std::vector<std::uint8_t> encode_grid(const SomGrid& grid, const DecaySchedule& schedule) {
    Writer w;
    w.put(kGridRecord);
    w.u64(grid.rows());
    w.u64(grid.cols());
    w.u64(grid.dim());
    put_schedule(w, schedule);
    for (double x : grid.weights()) w.f64(x);
    return w.take();
}

GridSnapshot decode_grid(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    if (r.get<std::uint32_t>() != kGridRecord) throw InvalidArgument("snapshot is not a grid record");
    const std::size_t rows = checked_size(r.u64());
    const std::size_t cols = checked_size(r.u64());
    const std::size_t dim = checked_size(r.u64());
    DecaySchedule sched = get_schedule(r);
    SomGrid grid(rows, cols, dim);
    grid.set_weights(get_reals(r, rows * cols * dim));
    r.expect_end();
    return {std::move(grid), sched};
}

std::vector<std::uint8_t> encode_model(const DendSomModel& model) {
    Writer w;
    w.put(kModelRecord);
    const auto& t = model.tiling();
    for (auto v : {t.image_rows, t.image_cols, t.patch_rows, t.patch_cols, t.stride_rows, t.stride_cols})
        w.u64(v);
    w.u64(model.n_labels());
    w.put<std::uint8_t>(model.bmu_rule() == BmuRule::cosine ? 1 : 0);
    w.put<std::uint8_t>(model.kernel() == NeighborhoodKernel::gaussian ? 1 : 0);
    put_schedule(w, model.schedule());
    w.u64(model.unit_rows());
    w.u64(model.unit_cols());
    w.u64(model.som_count());
    for (const auto& g : model.grids())
        for (double x : g.weights()) w.f64(x);
    for (const auto& h : model.hits())
        for (auto c : h.counts()) w.u64(c);
    return w.take();
}

DendSomModel decode_model(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    if (r.get<std::uint32_t>() != kModelRecord) throw InvalidArgument("snapshot is not a model record");
    TilingSpec tiling;
    tiling.image_rows = checked_size(r.u64());
    tiling.image_cols = checked_size(r.u64());
    tiling.patch_rows = checked_size(r.u64());
    tiling.patch_cols = checked_size(r.u64());
    tiling.stride_rows = checked_size(r.u64());
    tiling.stride_cols = checked_size(r.u64());
    tiling.validate();
    const std::size_t n_labels = checked_size(r.u64());
    const auto bmu = r.get<std::uint8_t>() ? BmuRule::cosine : BmuRule::euclidean;
    const auto kernel = r.get<std::uint8_t>() ? NeighborhoodKernel::gaussian : NeighborhoodKernel::linear;
    DecaySchedule sched = get_schedule(r);
    const std::size_t unit_rows = checked_size(r.u64());
    const std::size_t unit_cols = checked_size(r.u64());
    const std::size_t n_grids = checked_size(r.u64());
    if (n_grids != tiling.tiles()) throw DimensionError("snapshot grid count does not match its tiling");

    const std::size_t units = unit_rows * unit_cols;
    const std::size_t dim = tiling.patch_length();
    std::vector<SomGrid> grids;
    grids.reserve(n_grids);
    for (std::size_t j = 0; j < n_grids; ++j) {
        SomGrid g(unit_rows, unit_cols, dim);
        g.set_weights(get_reals(r, units * dim));
        grids.push_back(std::move(g));
    }
    std::vector<HitMatrix> hits;
    hits.reserve(n_grids);
    for (std::size_t j = 0; j < n_grids; ++j) {
        if (n_labels * units > r.remaining() / sizeof(std::uint64_t))
            throw TruncatedFile("snapshot ends inside a hit matrix");
        std::vector<std::uint64_t> counts(n_labels * units);
        for (auto& c : counts) c = r.u64();
        hits.emplace_back(n_labels, units, std::move(counts));
    }
    r.expect_end();
    return DendSomModel(tiling, std::move(grids), std::move(hits), sched, n_labels, bmu, kernel);
}

void save_grid(const SomGrid& grid, const DecaySchedule& schedule, const fs::path& path) {
    write_all(path, encode_grid(grid, schedule));
}

GridSnapshot load_grid(const fs::path& path) { return decode_grid(read_all(path)); }

void save_model(const DendSomModel& model, const fs::path& path) { write_all(path, encode_model(model)); }

DendSomModel load_model(const fs::path& path) { return decode_model(read_all(path)); }

}  // namespace dendsom
