#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "wgn/geometry.hpp"

using namespace wgn;
using testing::error_kind;

namespace {

const LayoutMetadata& default_meta() {
    static const LayoutMetadata meta = load_layout_metadata(default_layout_path());
    return meta;
}

TransducerLayout two_node_layout() {
    TransducerLayout l;
    l.coordinates = {{0.5, 0.9}, {0.5, 0.1}};
    l.top_row = {0};
    l.bottom_row = {1};
    return l;
}

}  // namespace

TEST_CASE("enumerate_paths counts and order") {
    CHECK(enumerate_paths(12).size() == 66);
    const auto two = enumerate_paths(2);
    REQUIRE(two.size() == 1);
    CHECK(two.pairs[0] == PathPair{0, 1});
    const auto four = enumerate_paths(4);
    REQUIRE(four.size() == 6);
    CHECK(four.pairs.front() == PathPair{0, 1});
    CHECK(four.pairs.back() == PathPair{2, 3});
    CHECK(error_kind([] { enumerate_paths(1); }) == ErrorKind::InvalidLayout);
}

TEST_CASE("enumerate_paths is a bijection onto unordered pairs") {
    for (int n = 2; n <= 20; ++n) {
        const auto paths = enumerate_paths(n);
        CHECK(paths.size() == n * (n - 1) / 2);
        std::set<std::pair<int, int>> seen;
        for (const auto& p : paths.pairs) {
            CHECK(p.i < p.j);
            CHECK(p.i >= 0);
            CHECK(p.j < n);
            seen.insert({p.i, p.j});
        }
        CHECK(static_cast<int>(seen.size()) == paths.size());
        CHECK(std::is_sorted(paths.pairs.begin(), paths.pairs.end(),
                             [](auto a, auto b) { return std::tie(a.i, a.j) < std::tie(b.i, b.j); }));
        for (int k = 0; k < paths.size(); ++k) {
            CHECK(paths.index_of(paths.pairs[k].i, paths.pairs[k].j) == k);
            CHECK(paths.index_of(paths.pairs[k].j, paths.pairs[k].i) == k);
        }
        const auto again = enumerate_paths(n);
        CHECK(again.pairs == paths.pairs);
    }
}

TEST_CASE("select_forward_paths") {
    const auto& meta = default_meta();
    const auto paths = enumerate_paths(meta.layout.size());
    const auto fwd = select_forward_paths(paths, meta.layout);
    CHECK(fwd.size() == 36);
    const std::set<int> top(meta.layout.top_row.begin(), meta.layout.top_row.end());
    for (int f = 0; f < fwd.size(); ++f) {
        const auto p = fwd.pairs[f];
        CHECK(top.contains(p.i) != top.contains(p.j));
        CHECK(paths.pairs[fwd.path_index[f]] == p);
        if (f > 0) CHECK(fwd.path_index[f] > fwd.path_index[f - 1]);
    }

    const auto small = two_node_layout();
    CHECK(select_forward_paths(enumerate_paths(2), small).size() == 1);

    TransducerLayout one_row = small;
    one_row.top_row = {0, 1};
    one_row.bottom_row = {};
    CHECK(error_kind([&] { select_forward_paths(enumerate_paths(2), one_row); }) == ErrorKind::InvalidLayout);
}

TEST_CASE("forward selection is invariant to permutations within a row") {
    auto layout = default_meta().layout;
    const auto paths = enumerate_paths(layout.size());
    auto as_set = [](const ForwardPathSet& f) {
        std::set<std::pair<int, int>> s;
        for (auto p : f.pairs) s.insert({p.i, p.j});
        return s;
    };
    const auto reference = as_set(select_forward_paths(paths, layout));
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        std::shuffle(layout.top_row.begin(), layout.top_row.end(), rng);
        std::shuffle(layout.bottom_row.begin(), layout.bottom_row.end(), rng);
        const auto fwd = select_forward_paths(paths, layout);
        CHECK(as_set(fwd) == reference);
        CHECK(fwd.size() < paths.size());
    }
}

TEST_CASE("layout validation") {
    auto layout = two_node_layout();
    CHECK_NOTHROW(layout.validate());
    layout.coordinates[0] = {1.2, 0.5};
    CHECK(error_kind([&] { layout.validate(); }) == ErrorKind::InvalidLayout);
    layout = two_node_layout();
    layout.bottom_row = {0};
    CHECK(error_kind([&] { layout.validate(); }) == ErrorKind::InvalidLayout);
    CHECK(error_kind([] { PlateSpec{0.0}.validate(); }) == ErrorKind::Config);
}

TEST_CASE("layout metadata round trip") {
    const auto& meta = default_meta();
    CHECK(meta.layout.size() == 12);
    CHECK(meta.layout.top_row.size() == 6);
    CHECK(meta.layout.bottom_row.size() == 6);
    CHECK(meta.catalog.size() == 28);
    CHECK(meta.plate.side_length_mm == 500.0);
    for (const auto& e : meta.catalog.entries()) CHECK(inside_unit_square(e.position));
    const auto back = layout_from_json(layout_to_json(meta));
    CHECK(back.layout.coordinates == meta.layout.coordinates);
    CHECK(back.catalog.entries().size() == meta.catalog.entries().size());
    CHECK(error_kind([&] { meta.catalog.at("D99"); }) == ErrorKind::Catalog);

    nlohmann::json dup = layout_to_json(meta);
    dup["transducers"][0] = {1.5, 0.2};
    CHECK(error_kind([&] { layout_from_json(dup); }).has_value());
}

TEST_CASE("no-damage target sits outside the plate") {
    CHECK_FALSE(inside_unit_square(kNoDamageTarget));
    CHECK(inside_unit_square({0.0, 0.0}));
    CHECK(inside_unit_square({1.0, 1.0}));
    CHECK_FALSE(inside_unit_square({0.5, 1.0 + 1e-12}));
}

TEST_CASE("make_split membership") {
    const auto& cat = default_meta().catalog;
    const auto a = make_split(SplitName::A, cat);
    CHECK(a.test_damage_labels == std::vector<std::string>{"D21", "D22", "D23", "D24"});
    CHECK(a.train_damage_labels.size() == 24);
    const auto b = make_split(SplitName::B, cat);
    CHECK(b.test_damage_labels.size() == 8);
    CHECK(b.train_damage_labels.size() == 20);
    CHECK(std::count(b.test_damage_labels.begin(), b.test_damage_labels.end(), "D1") == 1);
    for (const auto* s : {&a, &b}) {
        CHECK(s->pristine_partition.total() == 60);
        CHECK(s->pristine_partition.train == 48);
        CHECK(s->pristine_partition.val == 6);
        CHECK(s->pristine_partition.test == 6);
        std::set<std::string> test(s->test_damage_labels.begin(), s->test_damage_labels.end());
        for (const auto& l : s->train_damage_labels) CHECK_FALSE(test.contains(l));
    }

    std::vector<DamageEntry> partial;
    for (const auto& e : cat.entries())
        if (e.label != "D22") partial.push_back(e);
    CHECK(error_kind([&] { make_split(SplitName::A, DamageCatalog(partial)); }) == ErrorKind::Catalog);
    CHECK(error_kind([] { parse_split_name("C"); }) == ErrorKind::Config);
}

TEST_CASE("assign_samples is seeded, disjoint and complete") {
    const auto& cat = default_meta().catalog;
    std::vector<SampleRef> refs;
    for (const auto& e : cat.entries()) refs.push_back({"dmg_" + e.label, e.label});
    for (int k = 0; k < 60; ++k) refs.push_back({"pri_" + std::to_string(k), std::nullopt});

    for (auto name : {SplitName::A, SplitName::B}) {
        const auto spec = make_split(name, cat);
        const auto a0 = assign_samples(spec, refs, 0);
        const auto a0b = assign_samples(spec, refs, 0);
        const auto a1 = assign_samples(spec, refs, 1);
        CHECK(a0.val_damaged == a0b.val_damaged);
        CHECK(a0.train_pristine == a0b.train_pristine);
        CHECK((a0.val_damaged != a1.val_damaged || a0.val_pristine != a1.val_pristine));

        const int pool = static_cast<int>(spec.train_damage_labels.size());
        CHECK(static_cast<int>(a0.val_damaged.size()) == static_cast<int>(std::ceil(0.2 * pool)));
        CHECK(a0.train_damaged.size() + a0.val_damaged.size() == static_cast<std::size_t>(pool));
        CHECK(a0.test_damaged.size() == spec.test_damage_labels.size());
        CHECK(a0.train_pristine.size() == 48);
        CHECK(a0.val_pristine.size() == 6);
        CHECK(a0.test_pristine.size() == 6);

        std::set<std::string> all;
        std::size_t total = 0;
        for (const auto* v : {&a0.train_damaged, &a0.val_damaged, &a0.test_damaged, &a0.train_pristine,
                              &a0.val_pristine, &a0.test_pristine}) {
            all.insert(v->begin(), v->end());
            total += v->size();
        }
        CHECK(total == refs.size());
        CHECK(all.size() == refs.size());

        const auto back = assignment_from_json(assignment_to_json(a0));
        CHECK(back.val_damaged == a0.val_damaged);
        CHECK(back.test_pristine == a0.test_pristine);
    }
}

TEST_CASE("validation reserve size") {
    CHECK(validation_reserve_count(24) == 5);
    CHECK(validation_reserve_count(20) == 4);
    CHECK(validation_reserve_count(5) == 2);
    CHECK(validation_reserve_count(3) == 2);
    CHECK(error_kind([] { validation_reserve_count(2); }) == ErrorKind::InsufficientData);
}

TEST_CASE("seeded_shuffle is a deterministic permutation") {
    std::vector<int> v(50);
    std::iota(v.begin(), v.end(), 0);
    auto a = v, b = v;
    seeded_shuffle(a, 11);
    seeded_shuffle(b, 11);
    CHECK(a == b);
    CHECK(a != v);
    std::sort(a.begin(), a.end());
    CHECK(a == v);
}
