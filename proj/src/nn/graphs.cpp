#include "wgn/nn/graphs.hpp"

#include "wgn/error.hpp"

namespace wgn::nn {

GraphTopology GraphTopology::to(torch::Dtype dtype) const {
    GraphTopology t = *this;
    t.node_coords = node_coords.to(dtype);
    t.geometry = geometry.to(dtype);
    t.incoming = incoming.to(dtype);
    return t;
}

GraphTopology make_topology(const TransducerLayout& layout, const std::vector<PathPair>& pairs, torch::Dtype dtype) {
    layout.validate();
    if (pairs.empty()) fail(ErrorKind::InvalidLayout, "graph needs at least one path");
    GraphTopology t;
    t.nodes = layout.size();
    t.pairs = static_cast<int64_t>(pairs.size());
    const int64_t e = t.edges();

    auto coords = torch::empty({t.nodes, 2}, torch::kFloat64);
    auto ca = coords.accessor<double, 2>();
    for (int64_t n = 0; n < t.nodes; ++n) {
        ca[n][0] = layout.coordinates[n].x;
        ca[n][1] = layout.coordinates[n].y;
    }
    auto src = torch::empty({e}, torch::kInt64), dst = torch::empty({e}, torch::kInt64);
    auto sa = src.accessor<int64_t, 1>(), da = dst.accessor<int64_t, 1>();
    for (int64_t k = 0; k < t.pairs; ++k) {
        const auto& p = pairs[k];
        if (p.i < 0 || p.j < 0 || p.i >= t.nodes || p.j >= t.nodes)
            fail(ErrorKind::InvalidLayout, "path endpoint outside the layout");
        sa[k] = p.i;
        da[k] = p.j;
        sa[t.pairs + k] = p.j;
        da[t.pairs + k] = p.i;
    }
    const auto disp = coords.index_select(0, dst) - coords.index_select(0, src);
    // Explicit sqrt keeps coincident endpoints at exactly zero length.
    const auto len = (disp * disp).sum(1, true).sqrt();
    t.geometry = torch::cat({disp, len}, 1);

    auto incoming = torch::zeros({t.nodes, e}, torch::kFloat64);
    auto adj = torch::eye(t.nodes, torch::kBool);
    auto ia = incoming.accessor<double, 2>();
    auto aa = adj.accessor<bool, 2>();
    std::vector<int> indeg(static_cast<std::size_t>(t.nodes), 0);
    for (int64_t k = 0; k < e; ++k) ++indeg[da[k]];
    for (int64_t k = 0; k < e; ++k) {
        ia[da[k]][k] = 1.0 / indeg[da[k]];
        aa[da[k]][sa[k]] = true;
    }
    t.node_coords = coords;
    t.src = src;
    t.dst = dst;
    t.incoming = incoming;
    t.adjacency = adj;
    return t.to(dtype);
}

torch::Tensor InverseGraph::path_tokens() const { return edge_features.narrow(1, 0, topo.pairs); }

InverseGraph build_inverse_graph(const GraphTopology& topo, const torch::Tensor& descriptors) {
    if (descriptors.dim() != 3 || descriptors.size(1) != topo.pairs)
        fail(ErrorKind::Data, "inverse graph needs one descriptor per measured path");
    if (descriptors.size(2) % 2 != 0) fail(ErrorKind::Data, "descriptor width must be even (2K)");
    const auto b = descriptors.size(0);
    const auto geom = topo.geometry.to(descriptors.scalar_type()).unsqueeze(0).expand({b, topo.edges(), 3});
    const auto spectral = torch::cat({descriptors, descriptors}, 1);
    return {topo, torch::cat({geom, spectral}, 2)};
}

ForwardGraph build_forward_graph(const GraphTopology& topo, const torch::Tensor& candidate) {
    if (candidate.dim() != 2 || candidate.size(1) != 2) fail(ErrorKind::Data, "candidate must be [B, 2]");
    if (!torch::isfinite(candidate).all().item<bool>())
        fail(ErrorKind::Numeric, "non-finite candidate coordinate");
    const auto b = candidate.size(0);
    const auto coords = topo.node_coords.to(candidate.scalar_type());
    // |p - r_n| for every node, then gathered per edge endpoint.
    const auto diff = candidate.unsqueeze(1) - coords.unsqueeze(0);  // [B, N, 2]
    const auto dist = torch::linalg_vector_norm(diff, 2, {2});       // [B, N]
    const auto d_src = dist.index_select(1, topo.src).unsqueeze(2);
    const auto d_dst = dist.index_select(1, topo.dst).unsqueeze(2);
    const auto geom = topo.geometry.to(candidate.scalar_type()).unsqueeze(0).expand({b, topo.edges(), 3});
    return {topo, candidate, torch::cat({geom, d_src, d_dst}, 2)};
}

torch::Tensor descriptors_tensor(const std::vector<const PreparedSample*>& samples, torch::Dtype dtype) {
    if (samples.empty()) fail(ErrorKind::InsufficientData, "empty sample batch");
    const auto k2 = samples.front()->descriptor.rows();
    const auto p = samples.front()->descriptor.cols();
    auto out = torch::empty({static_cast<int64_t>(samples.size()), p, k2}, torch::kFloat64);
    for (std::size_t s = 0; s < samples.size(); ++s) {
        // Column-major 2K x P is row-major P x 2K.
        const auto& d = samples[s]->descriptor;
        std::memcpy(out[s].data_ptr<double>(), d.data(), sizeof(double) * d.size());
    }
    return out.to(dtype);
}

torch::Tensor energy_tensor(const std::vector<const PreparedSample*>& samples, torch::Dtype dtype) {
    const auto f = samples.front()->delta_e.size();
    auto out = torch::empty({static_cast<int64_t>(samples.size()), f}, torch::kFloat64);
    for (std::size_t s = 0; s < samples.size(); ++s)
        std::memcpy(out[s].data_ptr<double>(), samples[s]->delta_e.data(), sizeof(double) * f);
    return out.to(dtype);
}

torch::Tensor target_tensor(const std::vector<const PreparedSample*>& samples, torch::Dtype dtype) {
    auto out = torch::empty({static_cast<int64_t>(samples.size()), 2}, torch::kFloat64);
    auto a = out.accessor<double, 2>();
    for (std::size_t s = 0; s < samples.size(); ++s) {
        const Vec2 t = samples[s]->label.target();
        a[s][0] = t.x;
        a[s][1] = t.y;
    }
    return out.to(dtype);
}

torch::Tensor damaged_mask(const std::vector<const PreparedSample*>& samples) {
    auto out = torch::empty({static_cast<int64_t>(samples.size())}, torch::kBool);
    for (std::size_t s = 0; s < samples.size(); ++s) out[s] = samples[s]->label.damaged();
    return out;
}

}  // namespace wgn::nn
