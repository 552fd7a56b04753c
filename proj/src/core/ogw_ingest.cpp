#include "wgn/ogw_ingest.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "wgn/error.hpp"
#include "wgn/log.hpp"
#include "wgn/store.hpp"

namespace fs = std::filesystem;

namespace wgn {

nlohmann::json IngestSummary::to_json() const {
    return {{"damaged", damaged},
            {"pristine", pristine},
            {"skipped_frequency", skipped_frequency},
            {"skipped_multi_defect", skipped_multi_defect},
            {"time_samples", time_samples},
            {"sampling_rate_hz", sampling_rate_hz}};
}

namespace {

SignalMatrix read_csv_matrix(const fs::path& path, int expected_cols) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Ingestion, path.string() + ": cannot open run file");
    std::vector<double> values;
    std::string line;
    long rows = 0, line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        int cols = 0;
        const char* p = line.data();
        const char* end = p + line.size();
        while (p < end) {
            while (p < end && (*p == ' ' || *p == '\t')) ++p;
            double v;
            auto [next, ec] = std::from_chars(p, end, v);
            if (ec != std::errc{} || !std::isfinite(v))
                fail(ErrorKind::Ingestion, path.string() + ":" + std::to_string(line_no) + ": malformed number");
            values.push_back(v);
            ++cols;
            p = next;
            while (p < end && (*p == ' ' || *p == '\t')) ++p;
            if (p < end) {
                if (*p != ',')
                    fail(ErrorKind::Ingestion, path.string() + ":" + std::to_string(line_no) + ": expected ','");
                ++p;
            }
        }
        if (cols != expected_cols)
            fail(ErrorKind::Schema, path.string() + ":" + std::to_string(line_no) + ": " + std::to_string(cols) +
                                        " columns, expected " + std::to_string(expected_cols));
        ++rows;
    }
    if (rows == 0) fail(ErrorKind::Ingestion, path.string() + ": no data rows");
    // Row-major text into a column-major matrix.
    return Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(values.data(), rows,
                                                                                              expected_cols);
}

}  // namespace

IngestSummary ingest_ogw(const fs::path& source, const fs::path& store_root, double excitation_hz) {
    const fs::path index_path = source / "index.json";
    if (!fs::is_regular_file(index_path)) fail(ErrorKind::Ingestion, index_path.string() + ": missing metadata index");
    nlohmann::json index;
    try {
        index = read_json_file(index_path);
    } catch (const Error& e) {
        fail(ErrorKind::Ingestion, e.what());
    }

    IngestSummary summary;
    LayoutMetadata meta;
    try {
        meta = layout_from_json(index.at("layout"));
        summary.sampling_rate_hz = index.at("sampling_rate_hz").get<double>();
        if (!index.at("runs").is_array()) fail(ErrorKind::Ingestion, index_path.string() + ": runs must be a list");
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Ingestion, index_path.string() + ": " + e.what());
    } catch (const Error& e) {
        fail(ErrorKind::Ingestion, index_path.string() + ": " + e.what());
    }
    if (!(summary.sampling_rate_hz > 0.0)) fail(ErrorKind::Ingestion, index_path.string() + ": bad sampling_rate_hz");
    const int path_count = enumerate_paths(meta.layout.size()).size();

    StoreWriter writer(store_root, meta);
    for (const auto& run : index["runs"]) {
        std::string id, file;
        double f0 = 0.0;
        std::vector<std::string> defects;
        try {
            id = run.at("id").get<std::string>();
            file = run.at("file").get<std::string>();
            f0 = run.at("excitation_hz").get<double>();
            defects = run.at("defects").get<std::vector<std::string>>();
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorKind::Ingestion, index_path.string() + ": run entry: " + e.what());
        }
        if (std::abs(f0 - excitation_hz) > 1e-6 * excitation_hz) {
            ++summary.skipped_frequency;
            continue;
        }
        if (defects.size() > 1) {
            ++summary.skipped_multi_defect;
            continue;
        }
        RawSample s;
        s.id = id;
        s.sampling_rate_hz = summary.sampling_rate_hz;
        s.excitation_freq_hz = f0;
        if (defects.size() == 1) {
            if (!meta.catalog.contains(defects[0]))
                fail(ErrorKind::Ingestion, index_path.string() + ": run " + id + " names unknown defect " + defects[0]);
            s.label = SampleLabel{defects[0], meta.catalog.at(defects[0])};
        }
        s.signals = read_csv_matrix(source / file, path_count);
        if (summary.time_samples == 0) summary.time_samples = s.signals.rows();
        if (s.signals.rows() != summary.time_samples)
            fail(ErrorKind::Schema, (source / file).string() + ": inconsistent length " +
                                        std::to_string(s.signals.rows()) + " vs " + std::to_string(summary.time_samples));
        writer.add(s);
        ++(s.label.damaged() ? summary.damaged : summary.pristine);
    }
    if (summary.damaged + summary.pristine == 0)
        fail(ErrorKind::Ingestion, index_path.string() + ": no runs at " + std::to_string(excitation_hz) + " Hz");
    if (summary.damaged != 28 || summary.pristine != 60)
        log_warning("ingested " + std::to_string(summary.damaged) + " damaged / " + std::to_string(summary.pristine) +
                    " pristine runs (reference archive has 28 / 60)");
    writer.commit({{"source", "ogw"}, {"source_dir", fs::absolute(source).string()}, {"ingest", summary.to_json()}});
    return summary;
}

}  // namespace wgn
