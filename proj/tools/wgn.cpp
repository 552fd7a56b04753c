// Command-line entry point: synth, ingest, prep, train, eval, report.
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <torch/torch.h>

#include "wgn/error.hpp"
#include "wgn/evaluation.hpp"
#include "wgn/hashing.hpp"
#include "wgn/log.hpp"
#include "wgn/ogw_ingest.hpp"
#include "wgn/prep.hpp"
#include "wgn/store.hpp"
#include "wgn/synthetic.hpp"
#include "wgn/train/trainer.hpp"

extern char** environ;

namespace fs = std::filesystem;
using nlohmann::json;
using namespace wgn;

namespace {

int exit_code(ErrorKind k) {
    switch (k) {
        case ErrorKind::Usage: return 2;
        case ErrorKind::Config: return 3;
        case ErrorKind::Data:
        case ErrorKind::InsufficientData: return 4;
        case ErrorKind::Ingestion:
        case ErrorKind::Schema: return 5;
        case ErrorKind::Numeric: return 6;
        case ErrorKind::Metric:
        case ErrorKind::Report: return 7;
        case ErrorKind::Io: return 8;
        case ErrorKind::InvalidLayout:
        case ErrorKind::Catalog: return 9;
    }
    return 1;
}

void print_error(std::string_view kind, const std::string& message) {
    std::cerr << json{{"error", kind}, {"message", message}}.dump() << "\n";
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> out;
    for (const auto& s : split_list(text)) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoull(s, &used));
            if (used != s.size()) throw std::invalid_argument(s);
        } catch (const std::exception&) {
            fail(ErrorKind::Usage, "bad seed '" + s + "'");
        }
    }
    if (out.empty()) fail(ErrorKind::Usage, "no seeds given");
    return out;
}

std::vector<std::string> parse_models(const std::string& text) {
    if (text == "all") return {"cnn1d", "lstm", "gnn-mlp", "gat", "wgn-inverse", "wgn-coupled"};
    auto out = split_list(text);
    for (const auto& m : out) (void)nn::parse_model_kind(m);
    if (out.empty()) fail(ErrorKind::Usage, "no model kinds given");
    return out;
}

std::vector<SplitName> parse_splits(const std::string& text) {
    if (text == "all") return {SplitName::A, SplitName::B};
    std::vector<SplitName> out;
    for (const auto& s : split_list(text)) out.push_back(parse_split_name(s));
    return out;
}

fs::path resolve_store(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("WGN_STORE"); env && *env) return env;
    fail(ErrorKind::Usage, "no store given (use --store or WGN_STORE)");
}

fs::path run_dir(const fs::path& out, const std::string& split, const std::string& model, std::uint64_t seed) {
    return out / "runs" / split / model / ("seed" + std::to_string(seed));
}

fs::path prep_dir(const fs::path& out, const std::string& split, std::uint64_t seed) {
    return out / "prep" / (split + "_seed" + std::to_string(seed));
}

void write_command_manifest(const fs::path& out, const std::string& name, const json& j) {
    fs::create_directories(out / "manifests");
    write_json_file(out / "manifests" / (name + ".json"), j);
}

// Flags shared by prep, train and eval.
struct PrepFlags {
    std::string preset = "paper";
    int bins = 0;
    double band_low = 0, band_high = 0;
    int filter_order = 0;
    double cutoff = 0;

    PrepConfig resolve() const {
        PrepConfig c;
        if (preset == "desk") c.bins = 60;
        if (bins > 0) c.bins = bins;
        if (band_low > 0) c.band_low_hz = band_low;
        if (band_high > 0) c.band_high_hz = band_high;
        if (filter_order > 0) c.filter_order = filter_order;
        if (cutoff > 0) c.cutoff_hz = cutoff;
        c.validate();
        return c;
    }

    void attach(CLI::App* app) {
        app->add_option("--bins", bins, "descriptor bins K");
        app->add_option("--band-low", band_low, "band low edge [Hz]");
        app->add_option("--band-high", band_high, "band high edge [Hz]");
        app->add_option("--filter-order", filter_order, "Butterworth order");
        app->add_option("--cutoff", cutoff, "high-pass cutoff [Hz]");
    }
};

PreparedDataset load_prepared_for(const fs::path& store_root, SplitName split, std::uint64_t seed,
                                  const PrepConfig& pc, const fs::path& out, bool* reused) {
    const auto store = SampleStore::open(store_root);
    return prepare_cached(store, split, seed, pc, prep_dir(out, to_string(split), seed), reused);
}

// Re-executes this binary once per seed and waits for all of them.
int fan_out(const std::vector<std::string>& base_args, const std::vector<std::uint64_t>& seeds) {
    std::vector<pid_t> pids;
    for (auto seed : seeds) {
        std::vector<std::string> args = base_args;
        args.push_back("--seeds");
        args.push_back(std::to_string(seed));
        std::vector<char*> argv;
        for (auto& a : args) argv.push_back(a.data());
        argv.push_back(nullptr);
        pid_t pid = 0;
        if (posix_spawn(&pid, "/proc/self/exe", nullptr, nullptr, argv.data(), environ) != 0)
            fail(ErrorKind::Io, "could not start worker for seed " + std::to_string(seed));
        pids.push_back(pid);
    }
    int worst = 0;
    for (auto pid : pids) {
        int status = 0;
        waitpid(pid, &status, 0);
        const int code = WIFEXITED(status) ? WEXITSTATUS(status) : 1;
        if (code != 0 && worst == 0) worst = code;
    }
    return worst;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"wgn: guided-wave damage localization pipeline"};
    app.require_subcommand(1);
    std::string log_level = "info";
    int threads = 1;
    app.add_option("--log-level", log_level, "debug|info|warning|error")->capture_default_str();
    app.add_option("--threads", threads, "intra-op threads (1 keeps runs bit-reproducible)")->capture_default_str();

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic store with a ground-truth oracle");
    std::string synth_out, layout_path;
    std::uint64_t synth_seed = 0;
    SyntheticConfig scfg;
    synth->add_option("--out", synth_out, "store root")->required();
    synth->add_option("--seed", synth_seed)->capture_default_str();
    synth->add_option("--layout", layout_path, "layout metadata JSON");
    std::string synth_catalog = "grid";
    synth->add_option("--catalog", synth_catalog, "grid: 7x4 defect grid; layout: the layout file's catalog")
        ->check(CLI::IsMember({"grid", "layout"}))
        ->capture_default_str();
    synth->add_option("--sigma", scfg.sigma)->capture_default_str();
    synth->add_option("--noise", scfg.noise_level)->capture_default_str();
    synth->add_option("--jitter", scfg.baseline_jitter)->capture_default_str();
    synth->add_option("--samples-per-location", scfg.samples_per_location)->capture_default_str();
    synth->add_option("--pristine", scfg.pristine_count)->capture_default_str();
    synth->add_option("--time-samples", scfg.time_samples)->capture_default_str();
    synth->add_option("--damage-amplitude", scfg.damage_amplitude)->capture_default_str();

    // ingest
    auto* ingest = app.add_subcommand("ingest", "ingest an OGW-1 export into a canonical store");
    std::string ingest_src, ingest_out;
    double ingest_hz = 100e3;
    ingest->add_option("--source", ingest_src)->required();
    ingest->add_option("--out", ingest_out, "store root (default: WGN_STORE)");
    ingest->add_option("--excitation-hz", ingest_hz)->capture_default_str();

    // prep
    auto* prep = app.add_subcommand("prep", "preprocess a store for one split and seed");
    std::string store_flag, out_dir = "out", split_text = "A", seeds_text = "0";
    PrepFlags prep_flags;
    prep->add_option("--store", store_flag, "store root (default: WGN_STORE)");
    prep->add_option("--split", split_text, "A|B|all")->capture_default_str();
    prep->add_option("--seeds,--seed", seeds_text, "comma-separated seeds")->capture_default_str();
    prep->add_option("--out", out_dir)->capture_default_str();
    prep->add_option("--preset", prep_flags.preset, "paper|desk")->capture_default_str();
    prep_flags.attach(prep);

    // train
    auto* train = app.add_subcommand("train", "run the staged training for one or more seeds");
    std::string model_text = "wgn-coupled";
    bool parallel = false;
    PrepFlags train_prep;
    json overrides = json::object();
    double dropout = -1, lambda_max = -1, alpha = -1, mu = -1, eps_grad = -1, lr1 = -1, lr2 = -1, lr3 = -1;
    int warmup = -1, ramp = -1, e1 = -1, e2 = -1, e3 = -1, batch = -1, hidden = -1, heads = -1;
    train->add_option("--store", store_flag, "store root (default: WGN_STORE)");
    train->add_option("--split", split_text, "A|B|all")->capture_default_str();
    train->add_option("--model,--models", model_text, "kind, comma list, or all")->capture_default_str();
    train->add_option("--seeds,--seed", seeds_text, "comma-separated seeds")->capture_default_str();
    train->add_option("--out", out_dir)->capture_default_str();
    train->add_option("--preset", train_prep.preset, "paper|desk")->capture_default_str();
    train->add_flag("--parallel", parallel, "one worker process per seed");
    train->add_option("--lambda-max", lambda_max);
    train->add_option("--warmup", warmup);
    train->add_option("--ramp", ramp);
    train->add_option("--alpha", alpha);
    train->add_option("--mu", mu);
    train->add_option("--eps-grad", eps_grad);
    train->add_option("--stage1-epochs", e1);
    train->add_option("--stage2-epochs", e2);
    train->add_option("--stage3-epochs", e3);
    train->add_option("--stage1-lr", lr1);
    train->add_option("--stage2-lr", lr2);
    train->add_option("--stage3-lr", lr3);
    train->add_option("--batch-size", batch);
    train->add_option("--hidden", hidden);
    train->add_option("--heads", heads);
    train->add_option("--dropout", dropout);
    train_prep.attach(train);

    // eval
    auto* eval = app.add_subcommand("eval", "re-evaluate trained checkpoints and build the report");
    PrepFlags eval_prep;
    eval->add_option("--store", store_flag, "store root (default: WGN_STORE)");
    eval->add_option("--split", split_text, "A|B|all")->capture_default_str();
    eval->add_option("--models", model_text, "kind, comma list, or all")->capture_default_str();
    eval->add_option("--seeds", seeds_text)->capture_default_str();
    eval->add_option("--out", out_dir)->capture_default_str();
    eval->add_option("--preset", eval_prep.preset, "paper|desk")->capture_default_str();
    double margin = 0.0;
    eval->add_option("--margin", margin, "tolerance band around the plate for FPR")->capture_default_str();
    eval_prep.attach(eval);

    // report
    auto* report = app.add_subcommand("report", "aggregate stored predictions into report files");
    std::string runs_dir;
    report->add_option("--out", out_dir)->capture_default_str();
    report->add_option("--runs", runs_dir, "runs root (default: <out>/runs)");
    report->add_option("--margin", margin)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error("usage", e.what());
        return exit_code(ErrorKind::Usage);
    }

    try {
        if (log_level == "debug") set_log_level(LogLevel::Debug);
        else if (log_level == "info") set_log_level(LogLevel::Info);
        else if (log_level == "warning") set_log_level(LogLevel::Warning);
        else if (log_level == "error") set_log_level(LogLevel::Error);
        else fail(ErrorKind::Usage, "unknown log level " + log_level);
        if (threads < 1) fail(ErrorKind::Usage, "--threads must be >= 1");
        torch::set_num_threads(threads);

        if (*synth) {
            scfg.layout = load_layout_metadata(layout_path.empty() ? default_layout_path() : fs::path(layout_path));
            if (synth_catalog == "grid") scfg.layout.catalog = grid_damage_catalog();
            generate_synthetic(scfg, synth_seed, synth_out);
            log_info("synthetic store written to " + synth_out);
            return 0;
        }
        if (*ingest) {
            const fs::path dest = resolve_store(ingest_out);
            const auto summary = ingest_ogw(ingest_src, dest, ingest_hz);
            std::cout << summary.to_json().dump() << "\n";
            return 0;
        }
        if (*prep) {
            const auto store_root = resolve_store(store_flag);
            const auto pc = prep_flags.resolve();
            for (auto split : parse_splits(split_text))
                for (auto seed : parse_seeds(seeds_text)) {
                    bool reused = false;
                    const auto data = load_prepared_for(store_root, split, seed, pc, out_dir, &reused);
                    json m = {{"command", "prep"},        {"store", fs::absolute(store_root).string()},
                              {"split", to_string(split)}, {"seed", seed},
                              {"preset", prep_flags.preset}, {"prep_config", pc.to_json()},
                              {"dataset", data.summary()}, {"reused_cache", reused},
                              {"prep_dir", prep_dir(out_dir, to_string(split), seed).string()}};
                    write_command_manifest(out_dir, "prep_" + to_string(split) + "_seed" + std::to_string(seed), m);
                    log_info("prep " + to_string(split) + " seed " + std::to_string(seed) +
                             (reused ? ": reused cached preparation" : ": prepared"));
                }
            return 0;
        }
        if (*train) {
            const auto store_root = resolve_store(store_flag);
            const auto seeds = parse_seeds(seeds_text);
            const auto models = parse_models(model_text);
            const auto splits = parse_splits(split_text);
            if (parallel && seeds.size() > 1) {
                // Prepare once up front so workers only read the cache.
                const auto pc = train_prep.resolve();
                for (auto split : splits)
                    for (auto seed : seeds) load_prepared_for(store_root, split, seed, pc, out_dir, nullptr);
                std::vector<std::string> base;
                for (int k = 0; k < argc; ++k) {
                    const std::string a = argv[k];
                    if (a == "--parallel") continue;
                    if (a == "--seeds" || a == "--seed") {
                        ++k;
                        continue;
                    }
                    if (a.rfind("--seeds=", 0) == 0 || a.rfind("--seed=", 0) == 0) continue;
                    base.push_back(a);
                }
                return fan_out(base, seeds);
            }
            const auto pc = train_prep.resolve();
            for (auto split : splits)
                for (auto seed : seeds) {
                    const auto data = load_prepared_for(store_root, split, seed, pc, out_dir, nullptr);
                    for (const auto& mk : models) {
                        auto cfg = train::TrainConfig::from_preset(train_prep.preset, nn::parse_model_kind(mk));
                        if (lambda_max >= 0) cfg.coupling.lambda_max = lambda_max;
                        if (warmup >= 0) cfg.coupling.warmup = warmup;
                        if (ramp >= 0) cfg.coupling.ramp = ramp;
                        if (alpha >= 0) cfg.coupling.alpha = alpha;
                        if (mu >= 0) cfg.coupling.mu = mu;
                        if (eps_grad >= 0) cfg.coupling.eps_grad = eps_grad;
                        if (e1 >= 0) cfg.plan.stage1_epochs = e1;
                        if (e2 >= 0) cfg.plan.stage2_epochs = e2;
                        if (e3 >= 0) cfg.plan.stage3_epochs = e3;
                        if (lr1 > 0) cfg.plan.stage1_lr = lr1;
                        if (lr2 > 0) cfg.plan.stage2_lr = lr2;
                        if (lr3 > 0) cfg.plan.stage3_lr = lr3;
                        if (batch > 0) cfg.plan.batch_size = batch;
                        if (hidden > 0) cfg.model.hidden = hidden;
                        if (heads > 0) cfg.model.heads = heads;
                        if (dropout >= 0) cfg.model.dropout = dropout;
                        const auto dir = run_dir(out_dir, to_string(split), mk, seed);
                        log_info("train " + to_string(split) + " " + mk + " seed " + std::to_string(seed));
                        auto res = train::run_stages(data, cfg, seed, dir);
                        // Record where the data came from so the run is reproducible from here alone.
                        res.manifest["store"] = fs::absolute(store_root).string();
                        res.manifest["store_manifest_sha256"] =
                            sha256_hex(SampleStore::open(store_root).manifest().dump());
                        res.manifest["command_line"] = std::vector<std::string>(argv, argv + argc);
                        write_json_file(dir / "manifest.json", res.manifest);
                        log_info("  unseen/seen/fpr: " + res.manifest["metrics"].dump());
                    }
                }
            return 0;
        }
        if (*eval) {
            const auto store_root = resolve_store(store_flag);
            const auto pc = eval_prep.resolve();
            std::vector<RunRecord> records;
            std::vector<std::string> missing;
            for (auto split : parse_splits(split_text))
                for (auto seed : parse_seeds(seeds_text)) {
                    std::optional<PreparedDataset> data;
                    for (const auto& mk : parse_models(model_text)) {
                        const auto dir = run_dir(out_dir, to_string(split), mk, seed);
                        if (!fs::exists(dir / "manifest.json")) {
                            missing.push_back(dir.string());
                            continue;
                        }
                        if (!data) data = load_prepared_for(store_root, split, seed, pc, out_dir, nullptr);
                        const auto run = train::load_run(dir, *data);
                        RunRecord rec;
                        rec.split = to_string(split);
                        rec.model = mk;
                        rec.seed = seed;
                        rec.checkpoint_sha256 = run.checkpoint_sha256;
                        rec.transducers = data->layout.layout.coordinates;
                        rec.predictions = train::predict_dataset(
                            *run.localizer, *data, run.config.float64 ? torch::kFloat64 : torch::kFloat32);
                        write_json_file(dir / "predictions.json", to_json(rec));
                        records.push_back(std::move(rec));
                    }
                }
            if (!missing.empty()) {
                std::string msg = "missing run artifacts:";
                for (const auto& m : missing) msg += "\n  " + m;
                fail(ErrorKind::Report, msg);
            }
            const auto rep = build_report(std::move(records), 500.0, margin);
            emit_report(rep, fs::path(out_dir) / "report");
            write_command_manifest(out_dir, "eval",
                                   {{"command", "eval"}, {"store", fs::absolute(store_root).string()},
                                    {"splits", split_text}, {"models", model_text}, {"seeds", seeds_text},
                                    {"margin", margin}, {"prep_config", pc.to_json()},
                                    {"report_dir", (fs::path(out_dir) / "report").string()}});
            std::cout << rep.to_markdown();
            return 0;
        }
        if (*report) {
            const fs::path root = runs_dir.empty() ? fs::path(out_dir) / "runs" : fs::path(runs_dir);
            const auto rep = build_report(collect_runs(root), 500.0, margin);
            emit_report(rep, fs::path(out_dir) / "report");
            write_command_manifest(out_dir, "report",
                                   {{"command", "report"}, {"runs", root.string()}, {"margin", margin},
                                    {"report_dir", (fs::path(out_dir) / "report").string()}});
            std::cout << rep.to_markdown();
            return 0;
        }
    } catch (const Error& e) {
        print_error(to_string(e.kind()), e.what());
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        print_error("internal", e.what());
        return 1;
    }
    return 0;
}
