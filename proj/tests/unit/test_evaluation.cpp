#include <doctest.h>

#include <cmath>
#include <random>

#include <png.h>

#include "helpers.hpp"
#include "wgn/evaluation.hpp"
#include "wgn/plot.hpp"
#include "wgn/store.hpp"

using namespace wgn;
using testing::error_kind;
using testing::slurp;
using testing::TempDir;

namespace {

RunRecord fake_run(const std::string& model, std::uint64_t seed, double offset, int false_alarms) {
    RunRecord r;
    r.split = "A";
    r.model = model;
    r.seed = seed;
    r.checkpoint_sha256 = "00";
    r.transducers = {{0.1, 0.94}, {0.9, 0.94}, {0.1, 0.06}, {0.9, 0.06}};
    for (int k = 0; k < 4; ++k) {
        const Vec2 t{0.76 + 0.02 * k, 0.8};
        r.predictions.push_back({"t" + std::to_string(k), SampleRole::Test, "D2" + std::to_string(k + 1), t,
                                 {t.x + offset, t.y}});
    }
    for (int k = 0; k < 2; ++k)
        r.predictions.push_back({"v" + std::to_string(k), SampleRole::Validation, "D" + std::to_string(k + 1),
                                 {0.2, 0.2}, {0.2, 0.2 + offset / 2}});
    for (int k = 0; k < 6; ++k) {
        const Vec2 p = k < false_alarms ? Vec2{0.3, 0.3} : Vec2{-0.001, -0.0012};
        r.predictions.push_back({"p" + std::to_string(k), SampleRole::Test, std::nullopt, kNoDamageTarget, p});
    }
    return r;
}

Rgb pixel_of_png(const std::filesystem::path& path, int x, int y) {
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    REQUIRE(png_image_begin_read_from_file(&img, path.string().c_str()));
    img.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(img));
    REQUIRE(png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr));
    const std::size_t k = (static_cast<std::size_t>(y) * img.width + x) * 3;
    return {buf[k], buf[k + 1], buf[k + 2]};
}

}  // namespace

TEST_CASE("mae") {
    const std::vector<Vec2> p{{0.0, 0.0}}, t{{0.3, 0.4}};
    const auto r = mae(p, t, 500.0);
    CHECK(r.normalized == doctest::Approx(0.5));
    CHECK(r.mm == doctest::Approx(250.0));
    CHECK(mae(t, t).normalized == 0.0);
    CHECK(error_kind([] { mae({}, {}); }) == ErrorKind::Metric);

    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> ud(-0.2, 1.2);
    std::vector<Vec2> a, b;
    for (int k = 0; k < 50; ++k) {
        a.push_back({ud(rng), ud(rng)});
        b.push_back({ud(rng), ud(rng)});
    }
    const auto m = mae(a, b, 500.0);
    CHECK(m.mm / m.normalized == 500.0);
}

TEST_CASE("no-damage classification") {
    CHECK(classify_no_damage(kNoDamageTarget) == Classification::Undamaged);
    CHECK(classify_no_damage({0.5, 0.5}) == Classification::Damaged);
    CHECK(classify_no_damage({0.0, -0.0005}) == Classification::Undamaged);
    CHECK(classify_no_damage({0.0, 0.0}) == Classification::Damaged);
    CHECK(classify_no_damage({1.0, 1.0}) == Classification::Damaged);
    CHECK(classify_no_damage({0.0, -0.0005}, 0.001) == Classification::Damaged);
}

TEST_CASE("false positive rate") {
    std::vector<Vec2> preds(18, kNoDamageTarget);
    auto f = fpr(preds);
    CHECK(f.positives == 0);
    CHECK(f.percent() == "0.0%");
    for (int k = 0; k < 7; ++k) preds[k] = {0.5, 0.5};
    f = fpr(preds);
    CHECK(f.fraction() == "7/18");
    CHECK(f.percent() == "38.9%");
    for (auto& p : preds) p = {0.5, 0.5};
    CHECK(fpr(preds).percent() == "100.0%");
    CHECK(error_kind([] { fpr({}); }) == ErrorKind::Metric);
    for (int n = 1; n <= 30; ++n)
        for (int k = 0; k <= n; ++k) {
            std::vector<Vec2> v(n, kNoDamageTarget);
            for (int i = 0; i < k; ++i) v[i] = {0.5, 0.5};
            const auto r = fpr(v);
            CHECK(std::lround(r.rate * r.total) == r.positives);
        }
}

TEST_CASE("aggregation across seeds") {
    const double v3[] = {0.2, 0.22, 0.24};
    const auto a = aggregate(v3);
    CHECK(a.mean == doctest::Approx(0.22));
    REQUIRE(a.std);
    CHECK(*a.std == doctest::Approx(0.02));
    const double v1[] = {0.3};
    CHECK_FALSE(aggregate(v1).std.has_value());
}

TEST_CASE("report emission") {
    TempDir tmp("report");
    std::vector<RunRecord> runs{fake_run("wgn-coupled", 0, 0.1, 0), fake_run("wgn-coupled", 1, 0.2, 1),
                                fake_run("wgn-coupled", 42, 0.3, 0), fake_run("gat", 0, 0.4, 2)};
    const auto rep = build_report(runs);
    REQUIRE(rep.models.size() == 2);
    CHECK(rep.models[0].model == "gat");
    CHECK(rep.models[1].model == "wgn-coupled");
    CHECK(rep.models[1].unseen_mae->mean == doctest::Approx(0.2));
    CHECK(*rep.models[1].unseen_mae->std == doctest::Approx(0.1));
    CHECK(rep.models[1].fpr->fraction() == "1/18");
    CHECK_FALSE(rep.models[0].unseen_mae->std.has_value());

    emit_report(rep, tmp.path / "a");
    emit_report(build_report(runs), tmp.path / "b");
    CHECK(slurp(tmp.path / "a" / "report.json") == slurp(tmp.path / "b" / "report.json"));
    CHECK(slurp(tmp.path / "a" / "report.md") == slurp(tmp.path / "b" / "report.md"));
    const auto md = slurp(tmp.path / "a" / "report.md");
    CHECK(md.find("0.200 ± 0.100") != std::string::npos);
    CHECK(md.find("100.0 ± 50.0") != std::string::npos);
    CHECK(md.find("(1 seed)") != std::string::npos);
    const auto map = tmp.path / "a" / "maps" / "A_wgn-coupled_42.png";
    CHECK(std::filesystem::exists(map));
    CHECK(slurp(map) == slurp(tmp.path / "b" / "maps" / "A_wgn-coupled_42.png"));
    CHECK(pixel_of_png(map, 0, 0) == Rgb{255, 255, 255});

    const auto j = read_json_file(tmp.path / "a" / "report.json");
    CHECK(j["models"][1]["unseen_mae"]["mean_mm"].get<double>() == doctest::Approx(100.0));
    CHECK(j["models"][0]["unseen_mae"]["single_seed"].get<bool>());
    CHECK(error_kind([] { build_report({}); }) == ErrorKind::Report);
}

TEST_CASE("map legend carries the five marker classes") {
    TempDir tmp("map");
    auto run = fake_run("wgn-coupled", 0, 0.05, 2);
    const auto rep = build_report({run});
    emit_report(rep, tmp.path);
    const auto map = tmp.path / "maps" / "A_wgn-coupled_0.png";
    png_image img{};
    img.version = PNG_IMAGE_VERSION;
    REQUIRE(png_image_begin_read_from_file(&img, map.string().c_str()));
    img.format = PNG_FORMAT_RGB;
    std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(img));
    REQUIRE(png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr));
    auto count = [&](Rgb c) {
        int n = 0;
        for (std::size_t k = 0; k < buf.size(); k += 3)
            if (buf[k] == c.r && buf[k + 1] == c.g && buf[k + 2] == c.b) ++n;
        return n;
    };
    CHECK(count({31, 90, 200}) > 0);
    CHECK(count({210, 35, 35}) > 0);
    CHECK(count({30, 150, 60}) > 0);
    CHECK(count({130, 130, 130}) > 0);
    CHECK(count({0, 0, 0}) > 0);
}

TEST_CASE("collect_runs reports gaps") {
    TempDir tmp("collect");
    const auto run = fake_run("gat", 0, 0.1, 0);
    std::filesystem::create_directories(tmp.path / "A" / "gat" / "seed0");
    write_json_file(tmp.path / "A" / "gat" / "seed0" / "predictions.json", to_json(run));
    CHECK(collect_runs(tmp.path).size() == 1);
    std::filesystem::create_directories(tmp.path / "A" / "gat" / "seed1");
    try {
        collect_runs(tmp.path);
        FAIL("expected a report error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Report);
        CHECK(std::string(e.what()).find("seed1") != std::string::npos);
    }
}
