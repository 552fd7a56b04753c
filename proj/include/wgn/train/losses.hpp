#pragma once

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "wgn/nn/forward_model.hpp"

namespace wgn::train {

struct CouplingConfig {
    double lambda_max = 3.0;
    int warmup = 40;   // W, epochs with lambda = 0
    int ramp = 100;    // R, epochs of the linear ramp
    double mu = 1.0;
    double alpha = 0.1;
    double eps_weight = 0.01;
    double eps_grad = 1e-8;

    void validate() const;
    nlohmann::json to_json() const;
    static CouplingConfig from_json(const nlohmann::json& j);
};

/// Squared Euclidean distance, batch mean. pred/target: [B, 2]
torch::Tensor loss_localization(const torch::Tensor& pred, const torch::Tensor& target);

/// (dE + eps) / eps, elementwise.
torch::Tensor focus_weight(const torch::Tensor& delta_e, double eps = 0.01);
double focus_weight(double delta_e, double eps = 0.01);

/// Focus-weighted MSE over samples and paths.
torch::Tensor loss_forward_pretrain(const torch::Tensor& pred, const torch::Tensor& target, double eps = 0.01);

/// Unweighted MSE between the forward prediction at `coords` and `observed`,
/// over the rows selected by `damaged` ([B] bool). Zero when none are.
torch::Tensor loss_forward_consistency(nn::ForwardModel& forward, const nn::GraphTopology& topo,
                                       const torch::Tensor& coords, const torch::Tensor& observed,
                                       const torch::Tensor& damaged);

struct Correction {
    torch::Tensor direction;  // d = g / (|g| + eps), detached, [M, 2]
    torch::Tensor corrected;  // p - alpha d, [M, 2]
    torch::Tensor loss;       // mean |p_phys - truth|^2
};

/// One normalized-gradient step against the forward mismatch, on damaged
/// rows only. The direction comes from a detached probe, so gradients reach
/// `coords` only through p itself.
Correction physics_correction(nn::ForwardModel& forward, const nn::GraphTopology& topo, const torch::Tensor& coords,
                              const torch::Tensor& observed, const torch::Tensor& truth,
                              const torch::Tensor& damaged, double alpha, double eps_grad);

double lambda_schedule(int epoch, const CouplingConfig& cfg);

struct Stage3Loss {
    torch::Tensor total;
    torch::Tensor loc;
    torch::Tensor fwd;
    torch::Tensor corr;
    double lambda = 0.0;
};

/// L_loc(all) + lambda(epoch) L_fwd(damaged) + mu L_corr(damaged). With no
/// forward branch (or lambda = mu = 0) only L_loc is formed.
Stage3Loss total_stage3_loss(const torch::Tensor& pred, const torch::Tensor& target, const torch::Tensor& observed,
                             const torch::Tensor& damaged, nn::ForwardModel* forward, const nn::GraphTopology* topo,
                             const CouplingConfig& cfg, int epoch);

struct ValidationScore {
    double coord_mse = 0.0;
    double forward_mse = 0.0;
    double score() const noexcept { return coord_mse + forward_mse; }
};

/// On damaged validation samples only; `forward` may be null (inverse-only
/// runs score on coordinates alone). Throws Config on an empty set.
ValidationScore validation_score(const torch::Tensor& pred, const torch::Tensor& target, const torch::Tensor& observed,
                                 nn::ForwardModel* forward, const nn::GraphTopology* topo);

}  // namespace wgn::train
