#pragma once

#include <string>
#include <vector>

#include "driftlab/analysis.hpp"
#include "driftlab/calibration.hpp"
#include "driftlab/experiments.hpp"

namespace driftlab {

// Doubles in every output file carry 17 significant digits so identical runs
// are byte-comparable and values round-trip exactly.
std::string format_double(double v);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

// --- experiment CSV: one row per seed x cell ---------------------------------
// header: experiment,seed,ratio,severity,final_metric,delta_rel,delta_abs
// CD rows vary ratio at the maximum severity level; CF rows live on the
// ratio-0 landscape column and vary severity.

std::string curve_to_csv(const std::string& experiment, const DropCurve& curve);
std::string grid_to_csv(const std::string& experiment, const LandscapeGrid& grid);
std::string ablation_to_csv(const AblationResult& result, const std::vector<uint64_t>& seeds);

struct CsvRow {
    std::string experiment;
    uint64_t seed = 0;
    double ratio = 0.0;
    double severity = 0.0;
    double final_metric = 0.0;
    double delta_rel = 0.0;
    double delta_abs = 0.0;
};

std::vector<CsvRow> parse_experiment_csv(const std::string& path);

// Rebuilds a DropCurve from rows written by curve_to_csv.
DropCurve curve_from_csv_rows(const std::vector<CsvRow>& rows);

// --- JSON documents (schema 1) ----------------------------------------------

std::string curve_to_json(const std::string& experiment, const std::string& metric,
                          const DropCurve& curve, const std::string& config_json);
std::string grid_to_json(const std::string& experiment, const std::string& metric,
                         const LandscapeGrid& grid, const std::string& config_json);
std::string ablation_to_json(const AblationResult& result, const std::vector<uint64_t>& seeds,
                             const std::string& config_json);
std::string analysis_to_json(const CorrelationResult* correlation, const BumpReport* bump,
                             const std::string& config_json);
std::string feasibility_to_json(const CorruptionSpec* calibrated, double measured_drop,
                                const FeasibilityReport& report, const std::string& config_json);

// Parses a grid document written by grid_to_json; exact inverse.
LandscapeGrid grid_from_json(const std::string& text);

// Writes the grid JSON document and the gnuplot-friendly long-format mean
// table (ratio,severity,mean_delta) next to it.
void export_landscape(const LandscapeGrid& grid, const std::string& json_path,
                      const std::string& long_csv_path, const std::string& metric,
                      const std::string& config_json);

// Training curves as CSV rows (run_id, round, metric).
std::string histories_to_csv(const std::vector<NamedHistory>& histories);

}  // namespace driftlab
