#pragma once

#include <vector>

#include <torch/torch.h>

#include "wgn/geometry.hpp"
#include "wgn/prep.hpp"

namespace wgn::nn {

/// Fixed directed topology over the transducer nodes. Edges k < P run i -> j
/// for the k-th pair (i < j); edge P + k is its reverse.
struct GraphTopology {
    int64_t nodes = 0;
    int64_t pairs = 0;
    torch::Tensor node_coords;  // [N, 2]
    torch::Tensor src;          // [2P] int64
    torch::Tensor dst;          // [2P] int64
    torch::Tensor geometry;     // [2P, 3]: r_dst - r_src, |r_dst - r_src|
    torch::Tensor incoming;     // [N, 2P]: row-normalized incoming-edge incidence
    torch::Tensor adjacency;    // [N, N] bool: j -> i edge or i == j (self-loop)

    int64_t edges() const noexcept { return 2 * pairs; }
    GraphTopology to(torch::Dtype dtype) const;
};

GraphTopology make_topology(const TransducerLayout& layout, const std::vector<PathPair>& pairs,
                            torch::Dtype dtype = torch::kFloat32);

/// Batched measured-response graph: per directed edge
/// [r_j - r_i, |r_j - r_i|, z_ij] (width 3 + 2K); both directions of a path
/// carry the same spectral block.
struct InverseGraph {
    GraphTopology topo;
    torch::Tensor edge_features;  // [B, 2P, 3 + 2K]

    int64_t batch() const { return edge_features.size(0); }
    int64_t bins() const { return (edge_features.size(2) - 3) / 2; }
    /// One row per measured path (i < j direction): [B, P, 3 + 2K].
    torch::Tensor path_tokens() const;
};

/// `descriptors` is [B, P, 2K] in canonical path order.
InverseGraph build_inverse_graph(const GraphTopology& topo, const torch::Tensor& descriptors);

/// Batched candidate-conditioned graph over the plate-spanning paths: per
/// directed edge [r_j - r_i, |r_j - r_i|, |p - r_i|, |p - r_j|].
struct ForwardGraph {
    GraphTopology topo;
    torch::Tensor candidate;      // [B, 2]
    torch::Tensor edge_features;  // [B, 2Pf, 5]
};

/// Differentiable in `candidate`. The distance at a transducer location has a
/// zero subgradient.
ForwardGraph build_forward_graph(const GraphTopology& topo, const torch::Tensor& candidate);

/// [B, P, 2K] tensor from prepared samples (descriptor is 2K x P).
torch::Tensor descriptors_tensor(const std::vector<const PreparedSample*>& samples,
                                 torch::Dtype dtype = torch::kFloat32);
torch::Tensor energy_tensor(const std::vector<const PreparedSample*>& samples, torch::Dtype dtype = torch::kFloat32);
/// Regression targets: defect coordinate or the no-damage target. [B, 2]
torch::Tensor target_tensor(const std::vector<const PreparedSample*>& samples, torch::Dtype dtype = torch::kFloat32);
torch::Tensor damaged_mask(const std::vector<const PreparedSample*>& samples);

}  // namespace wgn::nn
