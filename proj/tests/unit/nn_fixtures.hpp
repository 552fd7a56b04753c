#pragma once

#include <vector>

#include <torch/torch.h>

#include "wgn/geometry.hpp"
#include "wgn/nn/graphs.hpp"
#include "wgn/nn/localizer.hpp"

namespace testing {

inline wgn::nn::ModelConfig small_model() {
    wgn::nn::ModelConfig c;
    c.hidden = 32;
    c.heads = 4;
    c.attn_hidden = 16;
    c.forward_hidden = 32;
    c.lstm_hidden = 16;
    return c;
}

inline const wgn::LayoutMetadata& default_layout() {
    static const auto meta = wgn::load_layout_metadata(wgn::default_layout_path());
    return meta;
}

/// Consistent node relabeling: node i becomes pi[i]; paths are re-enumerated
/// canonically and descriptors follow their path.
struct Relabeled {
    wgn::TransducerLayout layout;
    wgn::PathSet paths;
    torch::Tensor desc;
};

inline Relabeled relabel(const wgn::TransducerLayout& layout, const wgn::PathSet& paths, const torch::Tensor& desc,
                         const std::vector<int>& pi) {
    Relabeled r;
    const int n = layout.size();
    std::vector<int> inv(n);
    for (int i = 0; i < n; ++i) inv[pi[i]] = i;
    r.layout.coordinates.resize(n);
    for (int i = 0; i < n; ++i) r.layout.coordinates[pi[i]] = layout.coordinates[i];
    for (int i : layout.top_row) r.layout.top_row.push_back(pi[i]);
    for (int i : layout.bottom_row) r.layout.bottom_row.push_back(pi[i]);
    r.paths = wgn::enumerate_paths(n);
    std::vector<int64_t> src_index;
    for (const auto& p : r.paths.pairs) src_index.push_back(paths.index_of(inv[p.i], inv[p.j]));
    r.desc = desc.index_select(1, torch::tensor(src_index, torch::kInt64));
    return r;
}

inline std::vector<int> shuffled_labels(int n, unsigned seed) {
    std::vector<int> pi(n);
    for (int i = 0; i < n; ++i) pi[i] = i;
    wgn::seeded_shuffle(pi, seed);
    return pi;
}

}  // namespace testing
