#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "wgn/ogw_ingest.hpp"
#include "wgn/prep.hpp"
#include "wgn/store.hpp"
#include "wgn/synthetic.hpp"

using namespace wgn;
using testing::error_kind;
using testing::slurp;
using testing::TempDir;
namespace fs = std::filesystem;

namespace {

SyntheticConfig desk_config() {
    SyntheticConfig cfg;
    cfg.layout = load_layout_metadata(default_layout_path());
    return cfg;
}

PrepConfig desk_prep() {
    PrepConfig p;
    p.bins = 60;
    return p;
}

// Writes a small archive in the documented export format.
void write_archive(const fs::path& dir, int time_samples, int damaged, int pristine, bool extras = true) {
    fs::create_directories(dir / "runs");
    const auto meta = load_layout_metadata(default_layout_path());
    nlohmann::json index;
    index["sampling_rate_hz"] = 1e6;
    index["layout"] = layout_to_json(meta);
    index["runs"] = nlohmann::json::array();
    auto write_run = [&](const std::string& id, double f0, std::vector<std::string> defects, double level) {
        std::ofstream out(dir / "runs" / (id + ".csv"));
        out << "# exported run " << id << "\n";
        for (int t = 0; t < time_samples; ++t) {
            for (int c = 0; c < 66; ++c) out << (c ? "," : "") << level * std::sin(0.1 * t + c);
            out << "\n";
        }
        index["runs"].push_back({{"id", id}, {"file", "runs/" + id + ".csv"}, {"excitation_hz", f0}, {"defects", defects}});
    };
    for (int k = 0; k < damaged; ++k)
        write_run("d" + std::to_string(k), 100e3, {meta.catalog.entries()[k % 28].label}, 1.0 + k);
    for (int k = 0; k < pristine; ++k) write_run("p" + std::to_string(k), 100e3, {}, 0.5);
    if (extras) {
        write_run("x200", 200e3, {"D3"}, 1.0);
        write_run("multi", 100e3, {"D3", "D9"}, 1.0);
    }
    std::ofstream(dir / "index.json") << index.dump(2);
}

}  // namespace

TEST_CASE("point to segment distance and synthetic deviation") {
    CHECK(point_segment_distance({0.5, 0.5}, {0.0, 0.5}, {1.0, 0.5}) == 0.0);
    CHECK(point_segment_distance({0.5, 0.8}, {0.0, 0.5}, {1.0, 0.5}) == doctest::Approx(0.3));
    CHECK(point_segment_distance({1.3, 0.9}, {0.0, 0.5}, {1.0, 0.5}) == doctest::Approx(0.5));
    CHECK(point_segment_distance({0.2, 0.2}, {0.4, 0.4}, {0.4, 0.4}) == doctest::Approx(std::sqrt(0.08)));

    const auto cfg = desk_config();
    const auto paths = enumerate_paths(12);
    const auto& r = cfg.layout.layout.coordinates;
    const Vec2 mid{(r[0].x + r[6].x) / 2.0, (r[0].y + r[6].y) / 2.0};
    CHECK(true_deviation(cfg, paths, mid)[paths.index_of(0, 6)] == 1.0);

    SyntheticConfig narrow = cfg;
    narrow.sigma = 0.005;
    // (0.5, 0.5) lies on some diagonal paths; pick a point away from all of them.
    const auto far = true_deviation(narrow, paths, {0.999, 0.5});
    CHECK(far.maxCoeff() < 1e-6);
}

TEST_CASE("synthetic deviation is monotone in segment distance") {
    const auto cfg = desk_config();
    const auto& r = cfg.layout.layout.coordinates;
    std::vector<std::pair<double, double>> pts;
    for (int gx = 0; gx <= 40; ++gx)
        for (int gy = 0; gy <= 40; ++gy) {
            const Vec2 p{gx / 40.0, gy / 40.0};
            const double d = point_segment_distance(p, r[2], r[9]);
            pts.push_back({d, std::exp(-d * d / (2 * cfg.sigma * cfg.sigma))});
        }
    std::sort(pts.begin(), pts.end());
    for (std::size_t k = 1; k < pts.size(); ++k) CHECK(pts[k].second <= pts[k - 1].second);
}

TEST_CASE("grid catalog keeps the corner blocks as the hold-out labels") {
    const auto cat = grid_damage_catalog();
    REQUIRE(cat.size() == 28);
    std::set<std::pair<double, double>> seen;
    for (const auto& e : cat.entries()) {
        CHECK(inside_unit_square(e.position));
        seen.insert({e.position.x, e.position.y});
    }
    CHECK(seen.size() == 28);
    // D1-D4 span the two lowest x and y grid lines, D21-D24 the two highest.
    std::set<double> xs, ys;
    for (const auto& e : cat.entries()) {
        xs.insert(e.position.x);
        ys.insert(e.position.y);
    }
    REQUIRE(xs.size() == 7);
    REQUIRE(ys.size() == 4);
    auto block = [&](bool low) {
        std::set<std::string> labels;
        const double x_cut = low ? *std::next(xs.begin()) : *std::next(xs.rbegin());
        const double y_cut = low ? *std::next(ys.begin()) : *std::next(ys.rbegin());
        for (const auto& e : cat.entries())
            if (low ? (e.position.x <= x_cut && e.position.y <= y_cut) : (e.position.x >= x_cut && e.position.y >= y_cut))
                labels.insert(e.label);
        return labels;
    };
    CHECK(block(true) == std::set<std::string>{"D1", "D2", "D3", "D4"});
    CHECK(block(false) == std::set<std::string>{"D21", "D22", "D23", "D24"});
    const auto split = make_split(SplitName::A, cat);
    CHECK(split.test_damage_labels.size() == 4);
}

TEST_CASE("synthetic config validation") {
    auto cfg = desk_config();
    cfg.sigma = 0.0;
    CHECK(error_kind([&] { cfg.validate(); }) == ErrorKind::Config);
    cfg = desk_config();
    cfg.noise_level = -1.0;
    CHECK(error_kind([&] { cfg.validate(); }) == ErrorKind::Config);
}

TEST_CASE("matrix container round trip") {
    TempDir tmp("matrix");
    Eigen::MatrixXd m(3, 2);
    m << 1.0, -2.5, 3.25, 1e-300, -0.0, 7.0;
    write_matrix_file(tmp.path / "m.bin", m);
    const auto bytes = slurp(tmp.path / "m.bin");
    CHECK(bytes.size() == 8 + 6 * 8);
    CHECK(bytes.substr(0, 8) == "WGNMAT01");
    const auto back = read_matrix_file(tmp.path / "m.bin", 3, 2);
    CHECK(std::memcmp(back.data(), m.data(), sizeof(double) * 6) == 0);
    CHECK(error_kind([&] { read_matrix_file(tmp.path / "m.bin", 2, 2); }) == ErrorKind::Schema);
    std::ofstream(tmp.path / "bad.bin") << "NOTAMAT0xxxxxxxx";
    CHECK(error_kind([&] { read_matrix_file(tmp.path / "bad.bin", 1, 1); }) == ErrorKind::Schema);
}

TEST_CASE("synthetic generation is deterministic") {
    TempDir tmp("synth");
    auto cfg = desk_config();
    cfg.time_samples = 512;
    generate_synthetic(cfg, 3, tmp.path / "a");
    generate_synthetic(cfg, 3, tmp.path / "b");
    generate_synthetic(cfg, 4, tmp.path / "c");
    const auto store = SampleStore::open(tmp.path / "a");
    CHECK(store.entries().size() == 88);
    CHECK(store.pristine_count() == 60);
    for (const auto& e : store.entries()) {
        for (const char* ext : {".bin", ".json"}) {
            const auto name = fs::path("samples") / (e.id + ext);
            CHECK(slurp(tmp.path / "a" / name) == slurp(tmp.path / "b" / name));
        }
    }
    CHECK(slurp(tmp.path / "a" / "manifest.json") == slurp(tmp.path / "b" / "manifest.json"));
    CHECK(slurp(tmp.path / "a" / "oracle.json") == slurp(tmp.path / "b" / "oracle.json"));
    const auto id = store.entries().front().id;
    CHECK(slurp(tmp.path / "a" / "samples" / (id + ".bin")) != slurp(tmp.path / "c" / "samples" / (id + ".bin")));
    const auto s = store.load(id);
    CHECK(s.signals.rows() == 512);
    CHECK(s.signals.cols() == 66);
    for (const auto& p : fs::directory_iterator(tmp.path)) CHECK(p.path().filename().string().find("staging") == std::string::npos);
}

TEST_CASE("pipeline energy targets match the closed-form oracle on noiseless data") {
    TempDir tmp("oracle");
    auto cfg = desk_config();
    cfg.noise_level = 0.0;
    cfg.baseline_jitter = 0.0;
    generate_synthetic(cfg, 0, tmp.path / "store");
    const auto store = SampleStore::open(tmp.path / "store");
    const auto data = prepare_dataset(store, SplitName::A, 0, desk_prep());
    const auto oracle = read_json_file(tmp.path / "store" / "oracle.json");

    // Every bin of a path carries the same deviation profile up to a per-bin
    // gain, so per-(bin, path) z-scoring reduces to z = (dev - m) / s with m, s
    // the training mean and population std of the true deviation.
    const int f_count = data.forward_paths.size();
    std::vector<std::string> train = data.assignment.train_ids();
    Eigen::VectorXd m = Eigen::VectorXd::Zero(f_count), s2 = Eigen::VectorXd::Zero(f_count);
    auto dev_of = [&](const std::string& id) {
        const auto v = oracle["samples"][id]["forward_deviation"].get<std::vector<double>>();
        return Eigen::Map<const Eigen::VectorXd>(v.data(), f_count).eval();
    };
    for (const auto& id : train) m += dev_of(id);
    m /= static_cast<double>(train.size());
    for (const auto& id : train) s2 += (dev_of(id) - m).array().square().matrix();
    const Eigen::VectorXd sd = (s2 / static_cast<double>(train.size())).array().sqrt();
    auto raw = [&](const Eigen::VectorXd& dev) {
        Eigen::VectorXd out(f_count);
        for (int f = 0; f < f_count; ++f)
            out[f] = std::max((std::abs(dev[f] - m[f]) - m[f]) / sd[f], 0.0);
        return out;
    };
    double e_max = 0.0;
    for (const auto& id : train) e_max = std::max(e_max, raw(dev_of(id)).maxCoeff());

    double worst = 0.0;
    int checked = 0;
    for (const auto& ps : data.samples) {
        const Eigen::VectorXd expected = (raw(dev_of(ps.id)) / e_max).cwiseMin(1.0);
        worst = std::max(worst, (expected - ps.delta_e).cwiseAbs().maxCoeff());
        ++checked;
    }
    CHECK(checked == 88);
    CHECK(worst < 0.02);
    MESSAGE("max |dE - oracle| = " << worst);
}

TEST_CASE("energy targets on a noisy synthetic store") {
    TempDir tmp("noisy");
    auto cfg = desk_config();
    generate_synthetic(cfg, 1, tmp.path / "store");
    const auto store = SampleStore::open(tmp.path / "store");
    const auto data = prepare_dataset(store, SplitName::A, 0, desk_prep());
    double pristine_mean = 0.0;
    int n_pristine = 0;
    for (const auto& ps : data.samples) {
        CHECK(ps.delta_e.minCoeff() >= 0.0);
        CHECK(ps.delta_e.maxCoeff() <= 1.0);
        CHECK(ps.descriptor.rows() == 120);
        CHECK(ps.descriptor.cols() == 66);
        if (ps.role == SampleRole::Train && !ps.label.damaged()) {
            pristine_mean += ps.delta_e.mean();
            ++n_pristine;
        }
    }
    CHECK(n_pristine == 48);
    CHECK(pristine_mean / n_pristine < 0.05);
    CHECK(data.stats.e_max > 0.0);

    bool reused = true;
    prepare_cached(store, SplitName::A, 0, desk_prep(), tmp.path / "prep", &reused);
    CHECK_FALSE(reused);
    const auto again = prepare_cached(store, SplitName::A, 0, desk_prep(), tmp.path / "prep", &reused);
    CHECK(reused);
    CHECK(again.samples.size() == data.samples.size());
    CHECK(again.sample(data.samples[5].id).descriptor == data.samples[5].descriptor);
    CHECK(again.sample(data.samples[5].id).delta_e == data.samples[5].delta_e);
    CHECK(again.assignment.val_damaged == data.assignment.val_damaged);
    prepare_cached(store, SplitName::A, 1, desk_prep(), tmp.path / "prep", &reused);
    CHECK_FALSE(reused);
}

TEST_CASE("ingestion of a documented export") {
    TempDir tmp("ingest");
    write_archive(tmp.path / "src", 40, 28, 60);
    const auto summary = ingest_ogw(tmp.path / "src", tmp.path / "store");
    CHECK(summary.damaged == 28);
    CHECK(summary.pristine == 60);
    CHECK(summary.skipped_frequency == 1);
    CHECK(summary.skipped_multi_defect == 1);
    const auto store = SampleStore::open(tmp.path / "store");
    CHECK(store.entries().size() == 88);
    const auto s = store.load("d3");
    CHECK(s.signals.rows() == 40);
    CHECK(s.signals.cols() == 66);
    CHECK(s.signals(7, 2) == doctest::Approx(4.0 * std::sin(0.7 + 2)).epsilon(1e-5));
    CHECK(s.label.damage_label == "D4");
    CHECK(s.sampling_rate_hz == 1e6);

    const auto before = slurp(tmp.path / "store" / "samples" / "d3.bin");
    const auto manifest_before = slurp(tmp.path / "store" / "manifest.json");
    ingest_ogw(tmp.path / "src", tmp.path / "store");
    CHECK(slurp(tmp.path / "store" / "samples" / "d3.bin") == before);
    CHECK(slurp(tmp.path / "store" / "manifest.json") == manifest_before);
}

TEST_CASE("ingestion failures leave no partial writes") {
    TempDir tmp("ingest-fail");
    write_archive(tmp.path / "src", 20, 4, 6, false);

    fs::remove(tmp.path / "src" / "index.json");
    CHECK(error_kind([&] { ingest_ogw(tmp.path / "src", tmp.path / "store"); }) == ErrorKind::Ingestion);
    CHECK_FALSE(fs::exists(tmp.path / "store"));

    write_archive(tmp.path / "src", 20, 4, 6, false);
    { std::ofstream(tmp.path / "src" / "runs" / "p5.csv", std::ios::app) << "1.0,abc\n"; }
    try {
        ingest_ogw(tmp.path / "src", tmp.path / "store");
        FAIL("expected an ingestion error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Ingestion);
        CHECK(std::string(e.what()).find("p5.csv") != std::string::npos);
    }
    CHECK_FALSE(fs::exists(tmp.path / "store"));
    for (const auto& p : fs::directory_iterator(tmp.path)) CHECK(p.path().filename().string().find("staging") == std::string::npos);

    write_archive(tmp.path / "src", 20, 4, 6, false);
    {
        std::ofstream out(tmp.path / "src" / "runs" / "d1.csv");
        for (int t = 0; t < 20; ++t) out << "1,2,3\n";
    }
    CHECK(error_kind([&] { ingest_ogw(tmp.path / "src", tmp.path / "store"); }) == ErrorKind::Schema);
    CHECK_FALSE(fs::exists(tmp.path / "store"));
}
