#include "wgn/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <tuple>

#include "wgn/error.hpp"
#include "wgn/plot.hpp"
#include "wgn/store.hpp"

namespace fs = std::filesystem;

namespace wgn {

MaeResult mae(std::span<const Vec2> predictions, std::span<const Vec2> truths, double side_length_mm) {
    if (predictions.empty()) fail(ErrorKind::Metric, "MAE over an empty set");
    if (predictions.size() != truths.size()) fail(ErrorKind::Metric, "MAE inputs differ in length");
    double sum = 0.0;
    for (std::size_t k = 0; k < predictions.size(); ++k) sum += distance(predictions[k], truths[k]);
    MaeResult r;
    r.normalized = sum / static_cast<double>(predictions.size());
    r.mm = r.normalized * side_length_mm;
    return r;
}

Classification classify_no_damage(Vec2 prediction, double margin) {
    return inside_unit_square(prediction, margin) ? Classification::Damaged : Classification::Undamaged;
}

std::string FprResult::fraction() const { return std::to_string(positives) + "/" + std::to_string(total); }

std::string FprResult::percent() const {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * rate);
    return buf;
}

FprResult fpr(std::span<const Vec2> pristine_predictions, double margin) {
    if (pristine_predictions.empty()) fail(ErrorKind::Metric, "FPR over an empty set");
    FprResult r;
    r.total = static_cast<int>(pristine_predictions.size());
    for (const auto& p : pristine_predictions)
        if (classify_no_damage(p, margin) == Classification::Damaged) ++r.positives;
    r.rate = static_cast<double>(r.positives) / r.total;
    return r;
}

FprResult pool(std::span<const FprResult> parts) {
    FprResult r;
    for (const auto& p : parts) {
        r.positives += p.positives;
        r.total += p.total;
    }
    if (r.total == 0) fail(ErrorKind::Metric, "FPR over an empty set");
    r.rate = static_cast<double>(r.positives) / r.total;
    return r;
}

nlohmann::json to_json(const SamplePrediction& p) {
    return {{"id", p.id},
            {"role", to_string(p.role)},
            {"damage_label", p.damage_label ? nlohmann::json(*p.damage_label) : nlohmann::json(nullptr)},
            {"truth", {p.truth.x, p.truth.y}},
            {"prediction", {p.prediction.x, p.prediction.y}}};
}

SamplePrediction prediction_from_json(const nlohmann::json& j) {
    SamplePrediction p;
    try {
        p.id = j.at("id").get<std::string>();
        const auto role = j.at("role").get<std::string>();
        if (role == "train") p.role = SampleRole::Train;
        else if (role == "val") p.role = SampleRole::Validation;
        else if (role == "test") p.role = SampleRole::Test;
        else fail(ErrorKind::Schema, "unknown role " + role);
        if (!j.at("damage_label").is_null()) p.damage_label = j.at("damage_label").get<std::string>();
        p.truth = {j.at("truth").at(0).get<double>(), j.at("truth").at(1).get<double>()};
        p.prediction = {j.at("prediction").at(0).get<double>(), j.at("prediction").at(1).get<double>()};
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Schema, std::string("prediction record: ") + e.what());
    }
    return p;
}

namespace {

nlohmann::json mae_json(const MaeResult& m) { return {{"normalized", m.normalized}, {"mm", m.mm}}; }

nlohmann::json fpr_json(const FprResult& f) {
    return {{"positives", f.positives},
            {"total", f.total},
            {"rate", f.rate},
            {"fraction", f.fraction()},
            {"percent", f.percent()}};
}

nlohmann::json aggregate_json(const Aggregate& a, double side_mm) {
    nlohmann::json j = {{"mean", a.mean}, {"mean_mm", a.mean * side_mm}, {"count", a.count}};
    if (a.std) {
        j["std"] = *a.std;
        j["std_mm"] = *a.std * side_mm;
    } else {
        j["std"] = nullptr;
        j["single_seed"] = true;
    }
    return j;
}

}  // namespace

nlohmann::json RunMetrics::to_json() const {
    nlohmann::json j = nlohmann::json::object();
    j["train_mae"] = train_mae ? mae_json(*train_mae) : nlohmann::json(nullptr);
    j["seen_mae"] = seen_mae ? mae_json(*seen_mae) : nlohmann::json(nullptr);
    j["unseen_mae"] = unseen_mae ? mae_json(*unseen_mae) : nlohmann::json(nullptr);
    j["fpr"] = fpr ? fpr_json(*fpr) : nlohmann::json(nullptr);
    return j;
}

RunMetrics evaluate_run(std::span<const SamplePrediction> predictions, double side_length_mm, double margin) {
    std::vector<Vec2> tr_p, tr_t, val_p, val_t, test_p, test_t, pristine;
    for (const auto& p : predictions) {
        if (p.damaged()) {
            auto [pv, tv] = p.role == SampleRole::Train        ? std::tie(tr_p, tr_t)
                            : p.role == SampleRole::Validation ? std::tie(val_p, val_t)
                                                               : std::tie(test_p, test_t);
            pv.push_back(p.prediction);
            tv.push_back(p.truth);
        } else if (p.role == SampleRole::Test) {
            pristine.push_back(p.prediction);
        }
    }
    RunMetrics m;
    if (!tr_p.empty()) m.train_mae = mae(tr_p, tr_t, side_length_mm);
    if (!val_p.empty()) m.seen_mae = mae(val_p, val_t, side_length_mm);
    if (!test_p.empty()) m.unseen_mae = mae(test_p, test_t, side_length_mm);
    if (!pristine.empty()) m.fpr = fpr(pristine, margin);
    return m;
}

Aggregate aggregate(std::span<const double> values) {
    if (values.empty()) fail(ErrorKind::Metric, "aggregate over no values");
    Aggregate a;
    a.count = static_cast<int>(values.size());
    for (double v : values) a.mean += v;
    a.mean /= a.count;
    if (a.count > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - a.mean) * (v - a.mean);
        a.std = std::sqrt(ss / (a.count - 1));
    }
    return a;
}

int model_rank(const std::string& model) {
    static const char* order[] = {"cnn1d", "lstm", "gnn-mlp", "gat", "wgn-inverse", "wgn-coupled"};
    for (int k = 0; k < 6; ++k)
        if (model == order[k]) return k;
    return 6;
}

nlohmann::json to_json(const RunRecord& run) {
    nlohmann::json preds = nlohmann::json::array();
    for (const auto& p : run.predictions) preds.push_back(to_json(p));
    nlohmann::json tx = nlohmann::json::array();
    for (const auto& r : run.transducers) tx.push_back({r.x, r.y});
    return {{"split", run.split},
            {"model", run.model},
            {"seed", run.seed},
            {"checkpoint_sha256", run.checkpoint_sha256},
            {"transducers", tx},
            {"predictions", preds}};
}

RunRecord run_from_json(const nlohmann::json& j) {
    RunRecord r;
    try {
        r.split = j.at("split").get<std::string>();
        r.model = j.at("model").get<std::string>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.checkpoint_sha256 = j.at("checkpoint_sha256").get<std::string>();
        for (const auto& t : j.at("transducers")) r.transducers.push_back({t.at(0).get<double>(), t.at(1).get<double>()});
        for (const auto& p : j.at("predictions")) r.predictions.push_back(prediction_from_json(p));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Schema, std::string("run record: ") + e.what());
    }
    return r;
}

EvalReport build_report(std::vector<RunRecord> runs, double side_length_mm, double margin) {
    if (runs.empty()) fail(ErrorKind::Report, "no completed runs to report");
    std::sort(runs.begin(), runs.end(), [](const RunRecord& a, const RunRecord& b) {
        return std::tuple(a.split, model_rank(a.model), a.model, a.seed) <
               std::tuple(b.split, model_rank(b.model), b.model, b.seed);
    });
    EvalReport rep;
    rep.side_length_mm = side_length_mm;
    rep.margin = margin;
    for (const auto& run : runs) {
        if (rep.models.empty() || rep.models.back().split != run.split || rep.models.back().model != run.model) {
            ModelSummary s;
            s.split = run.split;
            s.model = run.model;
            rep.models.push_back(s);
        }
        auto& s = rep.models.back();
        if (!s.seeds.empty() && s.seeds.back() == run.seed)
            fail(ErrorKind::Report, "duplicate run " + run.split + "/" + run.model + "/seed" + std::to_string(run.seed));
        s.seeds.push_back(run.seed);
        s.per_seed.push_back(evaluate_run(run.predictions, side_length_mm, margin));
    }
    for (auto& s : rep.models) {
        std::vector<double> seen, unseen;
        std::vector<FprResult> f;
        for (const auto& m : s.per_seed) {
            if (m.seen_mae) seen.push_back(m.seen_mae->normalized);
            if (m.unseen_mae) unseen.push_back(m.unseen_mae->normalized);
            if (m.fpr) f.push_back(*m.fpr);
        }
        if (!seen.empty()) s.seen_mae = aggregate(seen);
        if (!unseen.empty()) s.unseen_mae = aggregate(unseen);
        if (!f.empty()) s.fpr = pool(f);
    }
    rep.runs = std::move(runs);
    return rep;
}

nlohmann::json EvalReport::to_json() const {
    nlohmann::json ms = nlohmann::json::array();
    for (const auto& s : models) {
        nlohmann::json per = nlohmann::json::array();
        for (std::size_t k = 0; k < s.seeds.size(); ++k)
            per.push_back({{"seed", s.seeds[k]}, {"metrics", s.per_seed[k].to_json()}});
        ms.push_back({{"split", s.split},
                      {"model", s.model},
                      {"seeds", s.seeds},
                      {"seen_mae", s.seen_mae ? aggregate_json(*s.seen_mae, side_length_mm) : nlohmann::json(nullptr)},
                      {"unseen_mae",
                       s.unseen_mae ? aggregate_json(*s.unseen_mae, side_length_mm) : nlohmann::json(nullptr)},
                      {"fpr", s.fpr ? fpr_json(*s.fpr) : nlohmann::json(nullptr)},
                      {"per_seed", per}});
    }
    nlohmann::json rs = nlohmann::json::array();
    for (const auto& r : runs) rs.push_back(wgn::to_json(r));
    return {{"side_length_mm", side_length_mm},
            {"damaged_if_inside_margin", margin},
            {"seen_zone_set", "damaged validation samples"},
            {"models", ms},
            {"runs", rs}};
}

namespace {

std::string fmt_aggregate(const std::optional<Aggregate>& a, double scale, const char* f) {
    if (!a) return "n/a";
    char buf[64];
    if (a->std) {
        std::string spec = std::string(f) + " ± " + f;
        std::snprintf(buf, sizeof buf, spec.c_str(), a->mean * scale, *a->std * scale);
    } else {
        std::string spec = std::string(f) + " (1 seed)";
        std::snprintf(buf, sizeof buf, spec.c_str(), a->mean * scale);
    }
    return buf;
}

}  // namespace

std::string EvalReport::to_markdown() const {
    std::ostringstream md;
    md << "# Localization report\n\n";
    md << "MAE is the mean Euclidean error, normalized by the plate side (" << side_length_mm
       << " mm) and in millimetres. Seen MAE is measured on the damaged validation samples. "
          "FPR counts held-out pristine samples predicted inside the plate, pooled over seeds.\n\n";
    md << "| Split | Model | Seeds | Seen MAE | Seen MAE (mm) | Unseen MAE | Unseen MAE (mm) | FPR |\n";
    md << "|---|---|---|---|---|---|---|---|\n";
    for (const auto& s : models) {
        std::string seeds;
        for (auto sd : s.seeds) seeds += (seeds.empty() ? "" : ",") + std::to_string(sd);
        md << "| " << s.split << " | " << s.model << " | " << seeds << " | " << fmt_aggregate(s.seen_mae, 1.0, "%.3f")
           << " | " << fmt_aggregate(s.seen_mae, side_length_mm, "%.1f") << " | "
           << fmt_aggregate(s.unseen_mae, 1.0, "%.3f") << " | "
           << fmt_aggregate(s.unseen_mae, side_length_mm, "%.1f") << " | "
           << (s.fpr ? s.fpr->percent() + " (" + s.fpr->fraction() + ")" : "n/a") << " |\n";
    }
    bool single = false;
    for (const auto& s : models) single = single || s.seeds.size() == 1;
    if (single) md << "\nRows marked (1 seed) come from a single run; no spread is reported.\n";
    md << "\nLocalization maps: `maps/<split>_<model>_<seed>.png`.\n";
    return md.str();
}

namespace {

constexpr Rgb kBlue{31, 90, 200}, kRed{210, 35, 35}, kGreen{30, 150, 60}, kGray{130, 130, 130}, kBlack{0, 0, 0};

void render_map(const RunRecord& run, double margin, const fs::path& path) {
    Canvas c(800, 560);
    const int x0 = 50, y0 = 50, side = 460;
    const double lo = -0.06, hi = 1.06;
    auto px = [&](double x) {
        const double t = std::clamp((x - lo) / (hi - lo), 0.0, 1.0);
        return x0 + static_cast<int>(std::lround(t * side));
    };
    auto py = [&](double y) {
        const double t = std::clamp((y - lo) / (hi - lo), 0.0, 1.0);
        return y0 + side - static_cast<int>(std::lround(t * side));
    };
    c.rect(x0, y0, x0 + side, y0 + side, {200, 200, 200});
    c.rect(px(0.0), py(1.0), px(1.0), py(0.0), kBlack);
    c.text(x0, 18, "split " + run.split + "  " + run.model + "  seed " + std::to_string(run.seed), kBlack, 2);

    for (const auto& r : run.transducers) c.triangle(px(r.x), py(r.y), 7, kBlack);
    c.diamond(px(kNoDamageTarget.x), py(kNoDamageTarget.y), 7, kGray);
    for (const auto& p : run.predictions) {
        if (p.role != SampleRole::Test) continue;
        if (p.damaged()) c.ring(px(p.truth.x), py(p.truth.y), 8, kBlue, 3);
    }
    for (const auto& p : run.predictions) {
        if (p.role != SampleRole::Test) continue;
        if (classify_no_damage(p.prediction, margin) == Classification::Damaged)
            c.cross(px(p.prediction.x), py(p.prediction.y), 6, kRed, 2);
        else
            c.square(px(p.prediction.x), py(p.prediction.y), 5, kGreen, 2);
    }

    int ly = 80;
    const int lx = 545;
    auto entry = [&](auto draw, const char* label) {
        draw(lx + 8, ly + 6);
        c.text(lx + 26, ly, label, kBlack, 2);
        ly += 32;
    };
    entry([&](int x, int y) { c.ring(x, y, 8, kBlue, 3); }, "true damage");
    entry([&](int x, int y) { c.cross(x, y, 6, kRed, 2); }, "predicted damaged");
    entry([&](int x, int y) { c.square(x, y, 5, kGreen, 2); }, "predicted undamaged");
    entry([&](int x, int y) { c.diamond(x, y, 7, kGray); }, "no-damage target");
    entry([&](int x, int y) { c.triangle(x, y, 7, kBlack); }, "transducers");
    c.write_png(path);
}

}  // namespace

void emit_report(const EvalReport& report, const fs::path& out_dir) {
    fs::create_directories(out_dir / "maps");
    write_json_file(out_dir / "report.json", report.to_json());
    {
        std::ofstream md(out_dir / "report.md");
        if (!md) fail(ErrorKind::Report, "cannot write " + (out_dir / "report.md").string());
        md << report.to_markdown();
    }
    for (const auto& run : report.runs)
        render_map(run, report.margin,
                   out_dir / "maps" / (run.split + "_" + run.model + "_" + std::to_string(run.seed) + ".png"));
}

std::vector<RunRecord> collect_runs(const fs::path& root) {
    if (!fs::is_directory(root)) fail(ErrorKind::Report, "no run directory at " + root.string());
    std::vector<fs::path> dirs;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_directory() && e.path().filename().string().rfind("seed", 0) == 0) dirs.push_back(e.path());
    std::sort(dirs.begin(), dirs.end());
    std::vector<RunRecord> runs;
    std::vector<std::string> gaps;
    for (const auto& d : dirs) {
        if (fs::exists(d / "predictions.json"))
            runs.push_back(run_from_json(read_json_file(d / "predictions.json")));
        else
            gaps.push_back(d.string());
    }
    if (!gaps.empty()) {
        std::string msg = "runs without predictions (run `eval` first):";
        for (const auto& g : gaps) msg += " " + g;
        fail(ErrorKind::Report, msg);
    }
    if (runs.empty()) fail(ErrorKind::Report, "no completed runs below " + root.string());
    return runs;
}

}  // namespace wgn
