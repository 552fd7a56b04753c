// Thin Python view of the core: geometry, preparation, metrics, reports.
// Training stays in the wgn executable.
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "wgn/error.hpp"
#include "wgn/evaluation.hpp"
#include "wgn/geometry.hpp"
#include "wgn/prep.hpp"
#include "wgn/store.hpp"
#include "wgn/synthetic.hpp"

namespace py = pybind11;
using namespace wgn;

namespace {

std::vector<Vec2> to_points(const std::vector<std::pair<double, double>>& xy) {
    std::vector<Vec2> out;
    out.reserve(xy.size());
    for (auto [x, y] : xy) out.push_back({x, y});
    return out;
}

std::vector<std::pair<int, int>> to_pairs(const std::vector<PathPair>& pairs) {
    std::vector<std::pair<int, int>> out;
    for (const auto& p : pairs) out.emplace_back(p.i, p.j);
    return out;
}

LayoutMetadata layout_or_default(const std::string& path) {
    return load_layout_metadata(path.empty() ? default_layout_path() : std::filesystem::path(path));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "wavegraphnet core bindings";

    static PyObject* wgn_error = py::exception<Error>(m, "WgnError").release().ptr();
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            PyErr_SetString(wgn_error, (std::string(to_string(e.kind())) + ": " + e.what()).c_str());
        }
    });

    m.attr("NO_DAMAGE_TARGET") = py::make_tuple(kNoDamageTarget.x, kNoDamageTarget.y);

    m.def("enumerate_paths", [](int n) { return to_pairs(enumerate_paths(n).pairs); }, py::arg("transducers"));
    m.def(
        "forward_paths",
        [](const std::string& layout) {
            const auto meta = layout_or_default(layout);
            return to_pairs(select_forward_paths(enumerate_paths(meta.layout.size()), meta.layout).pairs);
        },
        py::arg("layout") = "");
    m.def(
        "transducers",
        [](const std::string& layout) {
            std::vector<std::pair<double, double>> out;
            for (auto p : layout_or_default(layout).layout.coordinates) out.emplace_back(p.x, p.y);
            return out;
        },
        py::arg("layout") = "");

    m.def(
        "mae",
        [](const std::vector<std::pair<double, double>>& pred, const std::vector<std::pair<double, double>>& truth,
           double side) {
            const auto r = mae(to_points(pred), to_points(truth), side);
            return py::make_tuple(r.normalized, r.mm);
        },
        py::arg("predictions"), py::arg("truths"), py::arg("side_length_mm") = 500.0,
        "Mean Euclidean error as (normalized, millimetres).");
    m.def(
        "fpr",
        [](const std::vector<std::pair<double, double>>& pred, double margin) {
            const auto r = fpr(to_points(pred), margin);
            py::dict d;
            d["positives"] = r.positives;
            d["total"] = r.total;
            d["rate"] = r.rate;
            d["fraction"] = r.fraction();
            d["percent"] = r.percent();
            return d;
        },
        py::arg("pristine_predictions"), py::arg("margin") = 0.0);
    m.def(
        "is_damaged", [](double x, double y, double margin) {
            return classify_no_damage({x, y}, margin) == Classification::Damaged;
        },
        py::arg("x"), py::arg("y"), py::arg("margin") = 0.0);

    m.def(
        "generate_synthetic",
        [](const std::filesystem::path& root, std::uint64_t seed, double noise_level, const std::string& layout,
           const std::string& catalog) {
            SyntheticConfig cfg;
            cfg.layout = layout_or_default(layout);
            if (catalog == "grid") cfg.layout.catalog = grid_damage_catalog();
            else if (catalog != "layout") fail(ErrorKind::Config, "catalog must be 'grid' or 'layout'");
            cfg.noise_level = noise_level;
            generate_synthetic(cfg, seed, root);
        },
        py::arg("root"), py::arg("seed") = 0, py::arg("noise_level") = 0.002, py::arg("layout") = "",
        py::arg("catalog") = "grid");

    m.def(
        "prepare",
        [](const std::filesystem::path& store, const std::string& split, std::uint64_t seed, int bins) {
            PrepConfig pc;
            pc.bins = bins;
            const auto data = prepare_dataset(SampleStore::open(store), parse_split_name(split), seed, pc);
            py::list samples;
            for (const auto& s : data.samples) {
                py::dict d;
                d["id"] = s.id;
                d["role"] = to_string(s.role);
                d["damaged"] = s.label.coordinate.has_value();
                const auto t = s.label.target();
                d["target"] = py::make_tuple(t.x, t.y);
                d["descriptor"] = s.descriptor;
                d["delta_e"] = s.delta_e;
                samples.append(d);
            }
            py::dict out;
            out["summary"] = py::module_::import("json").attr("loads")(data.summary().dump());
            out["samples"] = samples;
            return out;
        },
        py::arg("store"), py::arg("split") = "A", py::arg("seed") = 0, py::arg("bins") = 256,
        "Preprocess one split; descriptors are 2K x |P| arrays, delta_e has |P_f| entries.");

    m.def(
        "build_report",
        [](const std::filesystem::path& runs, const std::filesystem::path& out) {
            const auto report = build_report(collect_runs(runs));
            if (!out.empty()) emit_report(report, out);
            return report.to_json().dump();
        },
        py::arg("runs"), py::arg("out") = std::filesystem::path{},
        "Aggregate every run below `runs`; returns report JSON and optionally writes it.");
}
