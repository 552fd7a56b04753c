#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

namespace wgn {

/// Source export layout (one directory):
///
///   index.json   {"sampling_rate_hz": fs,
///                 "layout": {"transducers": [[x,y],...], "top_row": [...],
///                            "bottom_row": [...], "damage": {"D1": [x,y], ...}},
///                 "runs": [{"id": "...", "file": "relative/path.csv",
///                           "excitation_hz": 100000, "defects": ["D3"]}, ...]}
///   *.csv        T rows x |P| comma-separated values, canonical path order;
///                blank lines and lines starting with '#' are ignored.
///
/// Runs at other excitation frequencies and runs with more than one defect
/// are skipped. An empty `defects` list marks a pristine run.
struct IngestSummary {
    int damaged = 0;
    int pristine = 0;
    int skipped_frequency = 0;
    int skipped_multi_defect = 0;
    long time_samples = 0;
    double sampling_rate_hz = 0.0;

    nlohmann::json to_json() const;
};

/// All-or-nothing: on any error the destination is left untouched.
IngestSummary ingest_ogw(const std::filesystem::path& source, const std::filesystem::path& store_root,
                         double excitation_hz = 100e3);

}  // namespace wgn
