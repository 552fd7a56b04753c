#include "wgn/train/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "wgn/error.hpp"
#include "wgn/hashing.hpp"
#include "wgn/log.hpp"
#include "wgn/nn/common.hpp"
#include "wgn/nn/graphs.hpp"
#include "wgn/store.hpp"
#include "wgn/train/checkpoint.hpp"

namespace wgn::train {

namespace fs = std::filesystem;

// ------------------------------------------------------------------ configs

void StagePlan::validate() const {
    if (stage1_epochs < 0 || stage2_epochs < 0 || stage3_epochs < 0)
        fail(ErrorKind::Config, "stage epochs must be non-negative");
    if (stage1_lr <= 0 || stage2_lr <= 0 || stage3_lr <= 0) fail(ErrorKind::Config, "learning rates must be positive");
    if (batch_size <= 0) fail(ErrorKind::Config, "batch size must be positive");
    if (plateau_factor <= 0 || plateau_factor >= 1 || plateau_patience < 0)
        fail(ErrorKind::Config, "plateau factor must be in (0, 1) and patience non-negative");
    if (grad_clip <= 0) fail(ErrorKind::Config, "gradient clip must be positive");
}

nlohmann::json StagePlan::to_json() const {
    return {{"stage1_epochs", stage1_epochs}, {"stage2_epochs", stage2_epochs},
            {"stage3_epochs", stage3_epochs}, {"stage1_lr", stage1_lr},
            {"stage2_lr", stage2_lr},         {"stage3_lr", stage3_lr},
            {"batch_size", batch_size},       {"plateau_factor", plateau_factor},
            {"plateau_patience", plateau_patience}, {"grad_clip", grad_clip}};
}

StagePlan StagePlan::from_json(const nlohmann::json& j) {
    StagePlan p;
    p.stage1_epochs = j.value("stage1_epochs", p.stage1_epochs);
    p.stage2_epochs = j.value("stage2_epochs", p.stage2_epochs);
    p.stage3_epochs = j.value("stage3_epochs", p.stage3_epochs);
    p.stage1_lr = j.value("stage1_lr", p.stage1_lr);
    p.stage2_lr = j.value("stage2_lr", p.stage2_lr);
    p.stage3_lr = j.value("stage3_lr", p.stage3_lr);
    p.batch_size = j.value("batch_size", p.batch_size);
    p.plateau_factor = j.value("plateau_factor", p.plateau_factor);
    p.plateau_patience = j.value("plateau_patience", p.plateau_patience);
    p.grad_clip = j.value("grad_clip", p.grad_clip);
    p.validate();
    return p;
}

TrainConfig TrainConfig::from_preset(const std::string& preset, nn::ModelKind kind) {
    TrainConfig c;
    c.kind = kind;
    c.preset = preset;
    if (preset == "paper") return c;
    if (preset != "desk") fail(ErrorKind::Config, "unknown preset '" + preset + "' (paper, desk)");
    c.model.hidden = 64;
    c.model.heads = 8;
    c.model.attn_hidden = 32;
    c.model.forward_hidden = 64;
    c.model.lstm_hidden = 64;
    c.model.dropout = 0.0;  // dropout leaves an eval-time offset at this size; see notes
    c.plan.stage1_epochs = 150;
    c.plan.stage2_epochs = 300;  // forward loss still falling at 100; small model, cheap
    c.plan.stage3_epochs = 150;
    c.plan.stage1_lr = 1e-3;
    c.plan.stage2_lr = 1e-3;
    c.plan.stage3_lr = 2e-4;
    c.coupling.warmup = 20;
    c.coupling.ramp = 50;
    return c;
}

void TrainConfig::validate() const {
    model.validate();
    plan.validate();
    coupling.validate();
    if (kind == nn::ModelKind::WgnCoupled && plan.stage3_epochs > 0 && coupling.warmup >= plan.stage3_epochs)
        fail(ErrorKind::Config, "warmup must be shorter than Stage III");
}

nlohmann::json TrainConfig::to_json() const {
    return {{"model_kind", nn::to_string(kind)}, {"preset", preset},
            {"model", model.to_json()},          {"plan", plan.to_json()},
            {"coupling", coupling.to_json()},    {"float64", float64}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.kind = nn::parse_model_kind(j.at("model_kind").get<std::string>());
    c.preset = j.value("preset", c.preset);
    if (j.contains("model")) c.model = nn::ModelConfig::from_json(j.at("model"));
    if (j.contains("plan")) c.plan = StagePlan::from_json(j.at("plan"));
    if (j.contains("coupling")) c.coupling = CouplingConfig::from_json(j.at("coupling"));
    c.float64 = j.value("float64", false);
    c.validate();
    return c;
}

std::string TrainConfig::hash() const { return sha256_hex(to_json().dump()); }

nlohmann::json EpochRecord::to_json() const {
    nlohmann::json j = {{"stage", stage}, {"epoch", epoch}, {"lr", lr},         {"loss", loss},
                        {"loc", loc},     {"fwd", fwd},     {"corr", corr},     {"lambda", lambda},
                        {"val_metric", val_metric},         {"clipped_steps", clipped_steps}};
    if (score) j["score"] = *score;
    return j;
}

// ------------------------------------------------------------------ helpers

namespace {

struct TensorSet {
    std::vector<const PreparedSample*> samples;
    torch::Tensor desc, target, energy, damaged;

    int64_t size() const { return static_cast<int64_t>(samples.size()); }
};

TensorSet make_set(std::vector<const PreparedSample*> samples, torch::Dtype dtype) {
    TensorSet s;
    s.samples = std::move(samples);
    if (s.samples.empty()) return s;
    s.desc = nn::descriptors_tensor(s.samples, dtype);
    s.target = nn::target_tensor(s.samples, dtype);
    s.energy = nn::energy_tensor(s.samples, dtype);
    s.damaged = nn::damaged_mask(s.samples);
    return s;
}

TensorSet damaged_only(const TensorSet& all) {
    std::vector<const PreparedSample*> d;
    for (const auto* s : all.samples)
        if (s->label.damaged()) d.push_back(s);
    return make_set(std::move(d), all.desc.defined() ? all.desc.scalar_type() : torch::kFloat32);
}

std::vector<int64_t> epoch_order(int64_t n, std::uint64_t seed, int stage, int epoch) {
    std::vector<int64_t> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    seeded_shuffle(idx, mix_seed(seed, static_cast<std::uint64_t>(stage) * 100000 + static_cast<std::uint64_t>(epoch)));
    return idx;
}

double current_lr(torch::optim::Optimizer& opt) { return opt.param_groups().front().options().get_lr(); }

torch::Tensor predict_all(nn::Localizer& model, const nn::GraphTopology& topo, const torch::Tensor& desc,
                          int batch) {
    torch::NoGradGuard ng;
    std::vector<torch::Tensor> parts;
    for (int64_t k = 0; k < desc.size(0); k += batch) {
        const auto n = std::min<int64_t>(batch, desc.size(0) - k);
        parts.push_back(model.forward(nn::build_inverse_graph(topo, desc.narrow(0, k, n))));
    }
    return torch::cat(parts, 0);
}

class StepLog {
public:
    explicit StepLog(const fs::path& path) : out_(path, std::ios::trunc) {
        out_ << "stage,epoch,step,total,loc,fwd,corr,lambda,grad_norm\n";
    }
    void write(int stage, int epoch, int step, double total, double loc, double fwd, double corr, double lambda,
               double gn) {
        char buf[256];
        std::snprintf(buf, sizeof buf, "%d,%d,%d,%.10g,%.10g,%.10g,%.10g,%.6g,%.6g\n", stage, epoch, step, total, loc,
                      fwd, corr, lambda, gn);
        out_ << buf;
    }

private:
    std::ofstream out_;
};

[[noreturn]] void abort_with_snapshot(const fs::path& run_dir, int stage, int epoch, int step,
                                      const std::vector<const PreparedSample*>& batch, const nlohmann::json& values,
                                      const std::string& why) {
    nlohmann::json snap = {{"stage", stage}, {"epoch", epoch}, {"step", step}, {"reason", why}, {"values", values}};
    auto& ids = snap["batch_ids"] = nlohmann::json::array();
    for (const auto* s : batch) ids.push_back(s->id);
    const auto path = run_dir / "nan_snapshot.json";
    write_json_file(path, snap);
    fail(ErrorKind::Numeric, "training aborted (" + why + ") at stage " + std::to_string(stage) + " epoch " +
                                 std::to_string(epoch) + "; snapshot in " + path.string());
}

std::vector<const PreparedSample*> batch_samples(const TensorSet& set, const std::vector<int64_t>& idx) {
    std::vector<const PreparedSample*> out;
    for (auto k : idx) out.push_back(set.samples[static_cast<std::size_t>(k)]);
    return out;
}

}  // namespace

std::vector<SamplePrediction> predict_dataset(nn::Localizer& model, const PreparedDataset& data, torch::Dtype dtype) {
    std::vector<const PreparedSample*> all;
    for (const auto& s : data.samples) all.push_back(&s);
    const auto topo = nn::make_topology(data.layout.layout, data.paths.pairs, dtype);
    const bool was_training = model.is_training();
    model.eval();
    const auto pred = predict_all(model, topo, nn::descriptors_tensor(all, dtype), 32).to(torch::kFloat64);
    model.train(was_training);
    auto pa = pred.accessor<double, 2>();
    std::vector<SamplePrediction> out;
    for (std::size_t k = 0; k < all.size(); ++k) {
        SamplePrediction p;
        p.id = all[k]->id;
        p.role = all[k]->role;
        p.damage_label = all[k]->label.damage_label;
        p.truth = all[k]->label.target();
        p.prediction = {pa[static_cast<int64_t>(k)][0], pa[static_cast<int64_t>(k)][1]};
        out.push_back(std::move(p));
    }
    return out;
}

// ------------------------------------------------------------------ stages

TrainResult run_stages(const PreparedDataset& data, const TrainConfig& cfg, std::uint64_t seed,
                       const fs::path& run_dir) {
    cfg.validate();
    fs::create_directories(run_dir);
    const auto t0 = std::chrono::steady_clock::now();
    const auto dtype = cfg.float64 ? torch::kFloat64 : torch::kFloat32;
    const bool coupled = nn::uses_forward_branch(cfg.kind);
    const std::string split = to_string(data.assignment.spec.name);
    const std::string kind = nn::to_string(cfg.kind);
    const auto& plan = cfg.plan;

    const auto train = make_set(data.select(SampleRole::Train), dtype);
    const auto val = make_set(data.select(SampleRole::Validation), dtype);
    const auto val_dmg = damaged_only(val);
    if (train.size() == 0) fail(ErrorKind::InsufficientData, "no training samples");
    if (val_dmg.size() == 0) fail(ErrorKind::Config, "checkpoint selection needs damaged validation samples");

    const auto topo = nn::make_topology(data.layout.layout, data.paths.pairs, dtype);
    const auto ftopo = nn::make_topology(data.layout.layout, data.forward_paths.pairs, dtype);

    torch::manual_seed(mix_seed(seed, 11));
    auto model = nn::make_localizer(cfg.kind, cfg.model, data.bins());
    model->to(dtype);
    std::shared_ptr<nn::ForwardModel> forward;

    TrainResult result;
    auto& history = result.history;
    StepLog steps(run_dir / "steps.csv");

    std::vector<torch::Tensor> best_state;
    double best_score = std::numeric_limits<double>::infinity();
    int best_epoch = -1, best_stage = 0;
    ValidationScore best_parts;

    auto score_now = [&](nn::ForwardModel* fwd) {
        model->eval();
        const auto pred = predict_all(*model, topo, val_dmg.desc, plan.batch_size);
        return validation_score(pred, val_dmg.target, val_dmg.energy, fwd, fwd ? &ftopo : nullptr);
    };

    // Stage I and III share one loop: inverse parameters only.
    auto inverse_stage = [&](int stage, int epochs, double lr, nn::ForwardModel* fwd) {
        if (epochs == 0) return;
        torch::manual_seed(mix_seed(seed, 100 + static_cast<std::uint64_t>(stage)));
        torch::optim::Adam opt(model->parameters(), torch::optim::AdamOptions(lr));
        torch::optim::ReduceLROnPlateauScheduler sched(opt, torch::optim::ReduceLROnPlateauScheduler::min,
                                                       static_cast<float>(plan.plateau_factor),
                                                       plan.plateau_patience);
        for (int epoch = 0; epoch < epochs; ++epoch) {
            model->train();
            EpochRecord rec;
            rec.stage = stage;
            rec.epoch = epoch;
            rec.lr = current_lr(opt);
            const auto order = epoch_order(train.size(), seed, stage, epoch);
            int nb = 0;
            for (std::size_t k = 0; k < order.size(); k += static_cast<std::size_t>(plan.batch_size)) {
                const std::vector<int64_t> bidx(order.begin() + static_cast<long>(k),
                                                order.begin() + static_cast<long>(std::min(
                                                                    order.size(), k + plan.batch_size)));
                const auto ix = torch::tensor(bidx, torch::kInt64);
                Stage3Loss L;
                try {
                    const auto pred = model->forward(nn::build_inverse_graph(topo, train.desc.index_select(0, ix)));
                    L = total_stage3_loss(pred, train.target.index_select(0, ix), train.energy.index_select(0, ix),
                                          train.damaged.index_select(0, ix), fwd, fwd ? &ftopo : nullptr,
                                          cfg.coupling, epoch);
                } catch (const Error& e) {
                    if (e.kind() != ErrorKind::Numeric) throw;
                    abort_with_snapshot(run_dir, stage, epoch, nb, batch_samples(train, bidx), {}, e.what());
                }
                const double total = L.total.item<double>();
                const double loc = L.loc.item<double>(), fw = L.fwd.item<double>(), co = L.corr.item<double>();
                if (!std::isfinite(total))
                    abort_with_snapshot(run_dir, stage, epoch, nb, batch_samples(train, bidx),
                                        {{"total", total}, {"loc", loc}, {"fwd", fw}, {"corr", co},
                                         {"lambda", L.lambda}, {"lr", current_lr(opt)}},
                                        "non-finite loss");
                opt.zero_grad();
                L.total.backward();
                const double gn = torch::nn::utils::clip_grad_norm_(model->parameters(), plan.grad_clip);
                if (gn > plan.grad_clip) ++rec.clipped_steps;
                opt.step();
                steps.write(stage, epoch, nb, total, loc, fw, co, L.lambda, gn);
                rec.loss += total;
                rec.loc += loc;
                rec.fwd += fw;
                rec.corr += co;
                rec.lambda = L.lambda;
                ++nb;
            }
            rec.loss /= nb;
            rec.loc /= nb;
            rec.fwd /= nb;
            rec.corr /= nb;
            model->eval();
            {
                const auto vp = predict_all(*model, topo, val.desc, plan.batch_size);
                rec.val_metric = loss_localization(vp, val.target).item<double>();
            }
            if (stage == 3) {
                const auto s = score_now(fwd);
                rec.score = s.score();
                if (s.score() < best_score) {
                    best_score = s.score();
                    best_parts = s;
                    best_epoch = epoch;
                    best_stage = stage;
                    best_state = snapshot(*model);
                }
            }
            sched.step(static_cast<float>(rec.val_metric));
            if (epoch % 25 == 0 || epoch + 1 == epochs)
                log_debug(kind + " stage " + std::to_string(stage) + " epoch " + std::to_string(epoch) +
                          " loss " + std::to_string(rec.loss) + " val " + std::to_string(rec.val_metric));
            history.push_back(rec);
        }
    };

    // ---- Stage I
    inverse_stage(1, plan.stage1_epochs, plan.stage1_lr, nullptr);

    // ---- Stage II
    if (coupled) {
        torch::manual_seed(mix_seed(seed, 22));
        forward = std::make_shared<nn::ForwardModel>(cfg.model);
        forward->to(dtype);
        torch::manual_seed(mix_seed(seed, 102));
        torch::optim::Adam opt(forward->parameters(), torch::optim::AdamOptions(plan.stage2_lr));
        torch::optim::ReduceLROnPlateauScheduler sched(opt, torch::optim::ReduceLROnPlateauScheduler::min,
                                                       static_cast<float>(plan.plateau_factor),
                                                       plan.plateau_patience);
        const double eps = cfg.coupling.eps_weight;
        for (int epoch = 0; epoch < plan.stage2_epochs; ++epoch) {
            forward->train();
            EpochRecord rec;
            rec.stage = 2;
            rec.epoch = epoch;
            rec.lr = current_lr(opt);
            const auto order = epoch_order(train.size(), seed, 2, epoch);
            int nb = 0;
            for (std::size_t k = 0; k < order.size(); k += static_cast<std::size_t>(plan.batch_size)) {
                const std::vector<int64_t> bidx(order.begin() + static_cast<long>(k),
                                                order.begin() + static_cast<long>(std::min(
                                                                    order.size(), k + plan.batch_size)));
                const auto ix = torch::tensor(bidx, torch::kInt64);
                torch::Tensor loss;
                try {
                    const auto pred = forward->forward(nn::build_forward_graph(ftopo, train.target.index_select(0, ix)));
                    loss = loss_forward_pretrain(pred, train.energy.index_select(0, ix), eps);
                } catch (const Error& e) {
                    if (e.kind() != ErrorKind::Numeric) throw;
                    abort_with_snapshot(run_dir, 2, epoch, nb, batch_samples(train, bidx), {}, e.what());
                }
                const double lv = loss.item<double>();
                if (!std::isfinite(lv))
                    abort_with_snapshot(run_dir, 2, epoch, nb, batch_samples(train, bidx),
                                        {{"forward_pretrain", lv}, {"lr", current_lr(opt)}}, "non-finite loss");
                opt.zero_grad();
                loss.backward();
                const double gn = torch::nn::utils::clip_grad_norm_(forward->parameters(), plan.grad_clip);
                if (gn > plan.grad_clip) ++rec.clipped_steps;
                opt.step();
                steps.write(2, epoch, nb, lv, 0.0, lv, 0.0, 0.0, gn);
                rec.loss += lv;
                rec.fwd += lv;
                ++nb;
            }
            rec.loss /= nb;
            rec.fwd /= nb;
            forward->eval();
            {
                torch::NoGradGuard ng;
                const auto vp = forward->forward(nn::build_forward_graph(ftopo, val.target));
                rec.val_metric = loss_forward_pretrain(vp, val.energy, eps).item<double>();
            }
            sched.step(static_cast<float>(rec.val_metric));
            history.push_back(rec);
        }
        for (auto& p : forward->parameters()) p.requires_grad_(false);
        forward->eval();
        result.forward_checksum_before = nn::parameter_checksum(*forward);
    }

    // ---- Stage III
    inverse_stage(3, plan.stage3_epochs, plan.stage3_lr, coupled ? forward.get() : nullptr);

    if (coupled) {
        result.forward_checksum_after = nn::parameter_checksum(*forward);
        if (result.forward_checksum_after != result.forward_checksum_before)
            fail(ErrorKind::Numeric, "forward parameters changed during Stage III");
    }
    if (best_state.empty()) {
        // No Stage III: score the final Stage I model.
        best_parts = score_now(forward.get());
        best_score = best_parts.score();
        best_stage = plan.stage1_epochs > 0 ? 1 : 0;
        best_epoch = plan.stage1_epochs - 1;
    } else {
        restore(*model, best_state);
    }
    model->eval();

    // ---- artifacts
    nlohmann::json meta = {{"model_kind", kind}, {"split", split},           {"seed", seed},
                           {"stage", best_stage}, {"epoch", best_epoch},     {"score", best_score},
                           {"config", cfg.to_json()}, {"config_hash", cfg.hash()}, {"bins", data.bins()}};
    ModuleSet modules = {{"inverse", model.get()}};
    if (forward) modules.push_back({"forward", forward.get()});
    const std::string sha = save_checkpoint(run_dir / "checkpoint.wgnckpt", modules, meta);

    RunRecord& rec = result.record;
    rec.split = split;
    rec.model = kind;
    rec.seed = seed;
    rec.checkpoint_sha256 = sha;
    rec.predictions = predict_dataset(*model, data, dtype);
    rec.transducers = data.layout.layout.coordinates;
    write_json_file(run_dir / "predictions.json", to_json(rec));

    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    auto& m = result.manifest;
    m = {{"command", "train"},
         {"split", split},
         {"model_kind", kind},
         {"seed", seed},
         {"config", cfg.to_json()},
         {"config_hash", cfg.hash()},
         {"dataset", data.summary()},
         {"prep_config", data.config.to_json()},
         {"parameters", {{"inverse", nn::parameter_count(*model)}}},
         {"checkpoint",
          {{"file", "checkpoint.wgnckpt"},
           {"sha256", sha},
           {"stage", best_stage},
           {"epoch", best_epoch},
           {"score", best_score},
           {"coord_mse", best_parts.coord_mse},
           {"forward_mse", best_parts.forward_mse}}},
         {"metrics", evaluate_run(rec.predictions).to_json()},
         {"wall_seconds", secs}};
    if (forward) {
        m["parameters"]["forward"] = nn::parameter_count(*forward);
        m["forward_checksum"] = {{"before_stage3", result.forward_checksum_before},
                                 {"after_stage3", result.forward_checksum_after}};
    }
    auto& h = m["history"] = nlohmann::json::array();
    for (const auto& e : history) h.push_back(e.to_json());
    write_json_file(run_dir / "manifest.json", m);
    return result;
}

LoadedRun load_run(const fs::path& run_dir, const PreparedDataset& data) {
    const auto manifest = read_json_file(run_dir / "manifest.json");
    LoadedRun run;
    run.config = TrainConfig::from_json(manifest.at("config"));
    run.seed = manifest.at("seed").get<std::uint64_t>();
    run.split = manifest.at("split").get<std::string>();
    const auto ckpt = read_checkpoint(run_dir / manifest.at("checkpoint").at("file").get<std::string>());
    if (ckpt.sha256() != manifest.at("checkpoint").at("sha256").get<std::string>())
        fail(ErrorKind::Io, "checkpoint in " + run_dir.string() + " does not match its manifest");
    if (ckpt.meta().at("bins").get<int>() != data.bins())
        fail(ErrorKind::Config, "checkpoint was trained on a different bin count than the prepared data");
    run.checkpoint_sha256 = ckpt.sha256();
    const auto dtype = run.config.float64 ? torch::kFloat64 : torch::kFloat32;
    run.localizer = nn::make_localizer(run.config.kind, run.config.model, data.bins());
    run.localizer->to(dtype);
    load_module(ckpt, "inverse", *run.localizer);
    run.localizer->eval();
    if (nn::uses_forward_branch(run.config.kind)) {
        run.forward = std::make_shared<nn::ForwardModel>(run.config.model);
        run.forward->to(dtype);
        load_module(ckpt, "forward", *run.forward);
        run.forward->eval();
    }
    return run;
}

}  // namespace wgn::train
