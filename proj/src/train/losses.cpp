#include "wgn/train/losses.hpp"

#include "wgn/error.hpp"

namespace wgn::train {

void CouplingConfig::validate() const {
    if (lambda_max < 0 || mu < 0 || alpha < 0 || eps_weight <= 0 || eps_grad < 0 || warmup < 0 || ramp < 0)
        fail(ErrorKind::Config, "coupling parameters must be non-negative (eps_weight positive)");
}

nlohmann::json CouplingConfig::to_json() const {
    return {{"lambda_max", lambda_max}, {"warmup", warmup},         {"ramp", ramp},        {"mu", mu},
            {"alpha", alpha},           {"eps_weight", eps_weight}, {"eps_grad", eps_grad}};
}

CouplingConfig CouplingConfig::from_json(const nlohmann::json& j) {
    CouplingConfig c;
    c.lambda_max = j.value("lambda_max", c.lambda_max);
    c.warmup = j.value("warmup", c.warmup);
    c.ramp = j.value("ramp", c.ramp);
    c.mu = j.value("mu", c.mu);
    c.alpha = j.value("alpha", c.alpha);
    c.eps_weight = j.value("eps_weight", c.eps_weight);
    c.eps_grad = j.value("eps_grad", c.eps_grad);
    c.validate();
    return c;
}

torch::Tensor loss_localization(const torch::Tensor& pred, const torch::Tensor& target) {
    return (pred - target).pow(2).sum(1).mean();
}

torch::Tensor focus_weight(const torch::Tensor& delta_e, double eps) { return (delta_e + eps) / eps; }
double focus_weight(double delta_e, double eps) { return (delta_e + eps) / eps; }

torch::Tensor loss_forward_pretrain(const torch::Tensor& pred, const torch::Tensor& target, double eps) {
    return (focus_weight(target, eps) * (pred - target).pow(2)).mean();
}

torch::Tensor loss_forward_consistency(nn::ForwardModel& forward, const nn::GraphTopology& topo,
                                       const torch::Tensor& coords, const torch::Tensor& observed,
                                       const torch::Tensor& damaged) {
    const auto idx = damaged.nonzero().squeeze(1);
    if (idx.numel() == 0) return torch::zeros({}, coords.options());
    const auto p = coords.index_select(0, idx);
    const auto pred = forward.forward(nn::build_forward_graph(topo, p));
    return (pred - observed.index_select(0, idx)).pow(2).mean();
}

Correction physics_correction(nn::ForwardModel& forward, const nn::GraphTopology& topo, const torch::Tensor& coords,
                              const torch::Tensor& observed, const torch::Tensor& truth,
                              const torch::Tensor& damaged, double alpha, double eps_grad) {
    const auto idx = damaged.nonzero().squeeze(1);
    if (idx.numel() == 0) {
        const auto none = torch::zeros({0, 2}, coords.options());
        return {none, none, torch::zeros({}, coords.options())};
    }
    const auto p = coords.index_select(0, idx);
    const auto g = nn::coordinate_gradient(forward, topo, p, observed.index_select(0, idx));
    const auto dir = g / (torch::linalg_vector_norm(g, 2, {1}, true) + eps_grad);
    const auto phys = p - alpha * dir;
    return {dir, phys, (phys - truth.index_select(0, idx)).pow(2).sum(1).mean()};
}

double lambda_schedule(int epoch, const CouplingConfig& cfg) {
    if (epoch < cfg.warmup) return 0.0;
    if (epoch >= cfg.warmup + cfg.ramp) return cfg.lambda_max;
    return cfg.lambda_max * static_cast<double>(epoch - cfg.warmup) / static_cast<double>(cfg.ramp);
}

Stage3Loss total_stage3_loss(const torch::Tensor& pred, const torch::Tensor& target, const torch::Tensor& observed,
                             const torch::Tensor& damaged, nn::ForwardModel* forward, const nn::GraphTopology* topo,
                             const CouplingConfig& cfg, int epoch) {
    Stage3Loss out;
    out.loc = loss_localization(pred, target);
    out.fwd = torch::zeros({}, pred.options());
    out.corr = torch::zeros({}, pred.options());
    out.lambda = forward ? lambda_schedule(epoch, cfg) : 0.0;
    if (forward && out.lambda > 0.0) out.fwd = loss_forward_consistency(*forward, *topo, pred, observed, damaged);
    if (forward && cfg.mu > 0.0)
        out.corr = physics_correction(*forward, *topo, pred, observed, target, damaged, cfg.alpha, cfg.eps_grad).loss;
    const double mu = forward ? cfg.mu : 0.0;
    out.total = out.loc + out.lambda * out.fwd + mu * out.corr;
    return out;
}

ValidationScore validation_score(const torch::Tensor& pred, const torch::Tensor& target, const torch::Tensor& observed,
                                 nn::ForwardModel* forward, const nn::GraphTopology* topo) {
    if (pred.size(0) == 0) fail(ErrorKind::Config, "validation score needs at least one damaged validation sample");
    torch::NoGradGuard ng;
    ValidationScore s;
    s.coord_mse = loss_localization(pred, target).item<double>();
    if (forward) {
        const auto fp = forward->forward(nn::build_forward_graph(*topo, pred));
        s.forward_mse = (fp - observed).pow(2).mean().item<double>();
    }
    return s;
}

}  // namespace wgn::train
