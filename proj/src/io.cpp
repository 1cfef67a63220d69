#include "driftlab/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "driftlab/errors.hpp"
#include "driftlab/version.hpp"

namespace driftlab {

namespace {

constexpr const char* kCsvHeader = "experiment,seed,ratio,severity,final_metric,delta_rel,delta_abs";

void append_row(std::ostringstream& out, const std::string& experiment, uint64_t seed,
                double ratio, double severity, double final_metric, double delta_rel,
                double delta_abs) {
    out << experiment << ',' << seed << ',' << format_double(ratio) << ','
        << format_double(severity) << ',' << format_double(final_metric) << ','
        << format_double(delta_rel) << ',' << format_double(delta_abs) << '\n';
}

std::string json_array(const std::vector<double>& values) {
    std::string out = "[";
    for (size_t i = 0; i < values.size(); ++i) {
        if (i) out += ",";
        out += format_double(values[i]);
    }
    return out + "]";
}

std::string json_array(const std::vector<uint64_t>& values) {
    std::string out = "[";
    for (size_t i = 0; i < values.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(values[i]);
    }
    return out + "]";
}

std::string json_matrix(const Matrix& m) {
    std::string out = "[";
    for (int r = 0; r < m.rows; ++r) {
        if (r) out += ",";
        out += "[";
        for (int c = 0; c < m.cols; ++c) {
            if (c) out += ",";
            out += format_double(m(r, c));
        }
        out += "]";
    }
    return out + "]";
}

std::string json_matrices(const std::vector<Matrix>& ms) {
    std::string out = "[";
    for (size_t i = 0; i < ms.size(); ++i) {
        if (i) out += ",";
        out += json_matrix(ms[i]);
    }
    return out + "]";
}

std::string json_vectors(const std::vector<std::vector<double>>& vs) {
    std::string out = "[";
    for (size_t i = 0; i < vs.size(); ++i) {
        if (i) out += ",";
        out += json_array(vs[i]);
    }
    return out + "]";
}

std::string doc_head(const std::string& experiment, const std::string& metric,
                     const std::string& config_json) {
    std::string out = "{\"schema\":1,\"tool\":\"";
    out += kToolName;
    out += " ";
    out += kToolVersion;
    out += "\",\"experiment\":\"" + experiment + "\",\"metric\":\"" + metric + "\"";
    out += ",\"config\":" + config_json;
    return out;
}

Matrix matrix_from_json(const nlohmann::json& j) {
    Matrix m(static_cast<int>(j.size()), j.empty() ? 0 : static_cast<int>(j[0].size()));
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c) m(r, c) = j[static_cast<size_t>(r)][static_cast<size_t>(c)].get<double>();
    return m;
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_file(const std::string& path, const std::string& content) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(p.parent_path(), ec);
        if (ec) throw IoError("cannot create directory " + p.parent_path().string());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << content;
    if (!out) throw IoError("write failed for " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::string curve_to_csv(const std::string& experiment, const DropCurve& curve) {
    std::ostringstream out;
    out << kCsvHeader << '\n';
    bool is_ratio = curve.axis == "ratio";
    for (size_t s = 0; s < curve.seeds.size(); ++s) {
        for (int p = 0; p < curve.points(); ++p) {
            double x = curve.x[static_cast<size_t>(p)];
            double ratio = is_ratio ? x : 0.0;
            double severity = is_ratio ? 5.0 : x;
            append_row(out, experiment, curve.seeds[s], ratio, severity,
                       curve.per_seed_final[s][static_cast<size_t>(p)],
                       curve.per_seed_delta_rel[s][static_cast<size_t>(p)],
                       curve.per_seed_delta_abs[s][static_cast<size_t>(p)]);
        }
    }
    return out.str();
}

std::string grid_to_csv(const std::string& experiment, const LandscapeGrid& grid) {
    std::ostringstream out;
    out << kCsvHeader << '\n';
    for (size_t s = 0; s < grid.seeds.size(); ++s)
        for (int r = 0; r < grid.ratios(); ++r)
            for (int l = 0; l < grid.severities(); ++l)
                append_row(out, experiment, grid.seeds[s], grid.ratio_axis[static_cast<size_t>(r)],
                           grid.severity_axis[static_cast<size_t>(l)], grid.per_seed_final[s](r, l),
                           grid.per_seed_delta_rel[s](r, l), grid.per_seed_delta_abs[s](r, l));
    return out.str();
}

std::string ablation_to_csv(const AblationResult& result, const std::vector<uint64_t>& seeds) {
    std::ostringstream out;
    out << kCsvHeader << '\n';
    for (const AblationEntry& entry : result.entries) {
        std::string base = std::string("ablation/") + corruption_kind_name(entry.kind);
        for (size_t s = 0; s < seeds.size(); ++s) {
            append_row(out, base + "/cd", seeds[s], 1.0, 5.0, 0.0, entry.per_seed_cd[s], 0.0);
            append_row(out, base + "/cf", seeds[s], 0.0, 5.0, 0.0, entry.per_seed_cf[s], 0.0);
        }
    }
    return out.str();
}

std::vector<CsvRow> parse_experiment_csv(const std::string& path) {
    std::string text = read_file(path);
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty csv file: " + path);
    if (line != kCsvHeader)
        throw InvalidInputError(path + ": unexpected csv header '" + line + "'");
    std::vector<CsvRow> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        CsvRow row;
        auto next_cell = [&]() {
            if (!std::getline(ls, cell, ','))
                throw InvalidInputError(path + ":" + std::to_string(line_no) + ": short row");
            return cell;
        };
        row.experiment = next_cell();
        row.seed = std::stoull(next_cell());
        row.ratio = std::stod(next_cell());
        row.severity = std::stod(next_cell());
        row.final_metric = std::stod(next_cell());
        row.delta_rel = std::stod(next_cell());
        row.delta_abs = std::stod(next_cell());
        rows.push_back(std::move(row));
    }
    return rows;
}

DropCurve curve_from_csv_rows(const std::vector<CsvRow>& rows) {
    if (rows.empty()) throw InvalidInputError("no csv rows to rebuild a curve from");
    const std::string& experiment = rows.front().experiment;
    bool is_ratio = experiment.rfind("cd", 0) == 0;
    bool is_severity = experiment.rfind("cf", 0) == 0;
    if (!is_ratio && !is_severity)
        throw InvalidInputError("cannot rebuild a drop curve from experiment '" + experiment + "'");

    DropCurve curve;
    curve.axis = is_ratio ? "ratio" : "severity";
    for (const CsvRow& row : rows) {
        if (row.experiment != experiment)
            throw InvalidInputError("mixed experiments in one csv: " + row.experiment);
        double x = is_ratio ? row.ratio : row.severity;
        bool seed_known = false;
        for (uint64_t s : curve.seeds) seed_known |= s == row.seed;
        if (!seed_known) curve.seeds.push_back(row.seed);
        bool x_known = false;
        for (double v : curve.x) x_known |= v == x;
        if (!x_known) curve.x.push_back(x);
    }
    std::sort(curve.x.begin(), curve.x.end());
    size_t n_points = curve.x.size();
    auto x_index = [&](double x) {
        for (size_t i = 0; i < n_points; ++i)
            if (curve.x[i] == x) return i;
        throw InvalidInputError("csv row with unknown x value");
    };
    auto seed_index = [&](uint64_t seed) {
        for (size_t i = 0; i < curve.seeds.size(); ++i)
            if (curve.seeds[i] == seed) return i;
        throw InvalidInputError("csv row with unknown seed");
    };
    curve.per_seed_final.assign(curve.seeds.size(), std::vector<double>(n_points, 0.0));
    curve.per_seed_delta_rel.assign(curve.seeds.size(), std::vector<double>(n_points, 0.0));
    curve.per_seed_delta_abs.assign(curve.seeds.size(), std::vector<double>(n_points, 0.0));
    for (const CsvRow& row : rows) {
        size_t si = seed_index(row.seed);
        size_t pi = x_index(is_ratio ? row.ratio : row.severity);
        curve.per_seed_final[si][pi] = row.final_metric;
        curve.per_seed_delta_rel[si][pi] = row.delta_rel;
        curve.per_seed_delta_abs[si][pi] = row.delta_abs;
    }
    curve.mean_final.assign(n_points, 0.0);
    curve.mean_delta_rel.assign(n_points, 0.0);
    curve.mean_delta_abs.assign(n_points, 0.0);
    for (size_t p = 0; p < n_points; ++p) {
        for (size_t s = 0; s < curve.seeds.size(); ++s) {
            curve.mean_final[p] += curve.per_seed_final[s][p];
            curve.mean_delta_rel[p] += curve.per_seed_delta_rel[s][p];
            curve.mean_delta_abs[p] += curve.per_seed_delta_abs[s][p];
        }
        curve.mean_final[p] /= static_cast<double>(curve.seeds.size());
        curve.mean_delta_rel[p] /= static_cast<double>(curve.seeds.size());
        curve.mean_delta_abs[p] /= static_cast<double>(curve.seeds.size());
    }
    return curve;
}

std::string curve_to_json(const std::string& experiment, const std::string& metric,
                          const DropCurve& curve, const std::string& config_json) {
    std::string out = doc_head(experiment, metric, config_json);
    out += ",\"axis\":\"" + curve.axis + "\"";
    out += ",\"x\":" + json_array(curve.x);
    out += ",\"seeds\":" + json_array(curve.seeds);
    out += ",\"per_seed_final_metric\":" + json_vectors(curve.per_seed_final);
    out += ",\"per_seed_delta_rel\":" + json_vectors(curve.per_seed_delta_rel);
    out += ",\"per_seed_delta_abs\":" + json_vectors(curve.per_seed_delta_abs);
    out += ",\"mean_final_metric\":" + json_array(curve.mean_final);
    out += ",\"mean_delta_rel\":" + json_array(curve.mean_delta_rel);
    out += ",\"mean_delta_abs\":" + json_array(curve.mean_delta_abs);
    out += "}\n";
    return out;
}

std::string grid_to_json(const std::string& experiment, const std::string& metric,
                         const LandscapeGrid& grid, const std::string& config_json) {
    std::string out = doc_head(experiment, metric, config_json);
    out += ",\"ratio_axis\":" + json_array(grid.ratio_axis);
    out += ",\"severity_axis\":" + json_array(grid.severity_axis);
    out += ",\"seeds\":" + json_array(grid.seeds);
    out += ",\"per_seed_final_metric\":" + json_matrices(grid.per_seed_final);
    out += ",\"per_seed_delta_rel\":" + json_matrices(grid.per_seed_delta_rel);
    out += ",\"per_seed_delta_abs\":" + json_matrices(grid.per_seed_delta_abs);
    out += ",\"mean_final_metric\":" + json_matrix(grid.mean_final);
    out += ",\"mean_delta_rel\":" + json_matrix(grid.mean_delta_rel);
    out += ",\"mean_delta_abs\":" + json_matrix(grid.mean_delta_abs);
    out += "}\n";
    return out;
}

std::string ablation_to_json(const AblationResult& result, const std::vector<uint64_t>& seeds,
                             const std::string& config_json) {
    std::string out = doc_head("ablation", "delta_rel", config_json);
    out += ",\"seeds\":" + json_array(seeds);
    out += ",\"kinds\":[";
    for (size_t i = 0; i < result.entries.size(); ++i) {
        const AblationEntry& e = result.entries[i];
        if (i) out += ",";
        out += "{\"kind\":\"";
        out += corruption_kind_name(e.kind);
        out += "\",\"cd_drop_rel\":" + format_double(e.cd_drop_rel);
        out += ",\"cf_drop_rel\":" + format_double(e.cf_drop_rel);
        out += ",\"per_seed_cd\":" + json_array(e.per_seed_cd);
        out += ",\"per_seed_cf\":" + json_array(e.per_seed_cf);
        out += "}";
    }
    out += "]}\n";
    return out;
}

std::string analysis_to_json(const CorrelationResult* correlation, const BumpReport* bump,
                             const std::string& config_json) {
    std::string out = doc_head("analyze", "delta_rel", config_json);
    if (correlation) {
        out += ",\"correlation\":{\"pearson\":" + format_double(correlation->pearson);
        out += ",\"spearman\":" + format_double(correlation->spearman);
        out += ",\"slope\":" + format_double(correlation->slope);
        out += ",\"intercept\":" + format_double(correlation->intercept);
        out += ",\"n\":" + std::to_string(correlation->n) + "}";
    }
    if (bump) {
        out += ",\"bump\":{\"found\":";
        out += bump->found ? "true" : "false";
        out += ",\"ratio\":" + format_double(bump->ratio);
        out += ",\"severity\":" + format_double(bump->severity);
        out += ",\"peak_metric\":" + format_double(bump->peak_metric);
        out += ",\"improvement_vs_pure_cd_pct\":" + format_double(bump->improvement_vs_pure_cd_pct);
        out += ",\"improvement_vs_pure_cf_pct\":" + format_double(bump->improvement_vs_pure_cf_pct);
        out += "}";
    }
    out += "}\n";
    return out;
}

std::string feasibility_to_json(const CorruptionSpec* calibrated, double measured_drop,
                                const FeasibilityReport& report, const std::string& config_json) {
    std::string out = doc_head("calibrate", "relative_drop", config_json);
    if (calibrated) {
        out += ",\"calibrated\":{\"kind\":\"";
        out += corruption_kind_name(calibrated->kind);
        out += "\",\"level\":" + std::to_string(calibrated->severity_level);
        out += ",\"coverage\":" + format_double(calibrated->coverage);
        out += ",\"opacity\":" + format_double(calibrated->opacity);
        out += ",\"salt\":" + std::to_string(calibrated->rng_salt);
        out += ",\"measured_drop\":" + format_double(measured_drop) + "}";
    }
    out += ",\"feasibility\":{\"clean_on_clean\":" + format_double(report.clean_on_clean);
    out += ",\"clean_on_transformed\":" + format_double(report.clean_on_transformed);
    out += ",\"retrained_on_clean\":" + format_double(report.retrained_on_clean);
    out += ",\"retrained_on_transformed\":" + format_double(report.retrained_on_transformed);
    out += ",\"drop_after_retrain\":" + format_double(report.drop_after_retrain);
    out += ",\"order_switched\":";
    out += report.order_switched ? "true" : "false";
    out += ",\"passes\":";
    out += report.passes ? "true" : "false";
    out += "}}\n";
    return out;
}

LandscapeGrid grid_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    if (!j.contains("schema") || j["schema"].get<int>() != 1)
        throw InvalidInputError("unsupported grid schema");
    LandscapeGrid grid;
    grid.ratio_axis = j["ratio_axis"].get<std::vector<double>>();
    grid.severity_axis = j["severity_axis"].get<std::vector<double>>();
    grid.seeds = j["seeds"].get<std::vector<uint64_t>>();
    for (const auto& m : j["per_seed_final_metric"]) grid.per_seed_final.push_back(matrix_from_json(m));
    for (const auto& m : j["per_seed_delta_rel"]) grid.per_seed_delta_rel.push_back(matrix_from_json(m));
    for (const auto& m : j["per_seed_delta_abs"]) grid.per_seed_delta_abs.push_back(matrix_from_json(m));
    grid.mean_final = matrix_from_json(j["mean_final_metric"]);
    grid.mean_delta_rel = matrix_from_json(j["mean_delta_rel"]);
    grid.mean_delta_abs = matrix_from_json(j["mean_delta_abs"]);
    return grid;
}

void export_landscape(const LandscapeGrid& grid, const std::string& json_path,
                      const std::string& long_csv_path, const std::string& metric,
                      const std::string& config_json) {
    write_file(json_path, grid_to_json("joint", metric, grid, config_json));
    std::ostringstream out;
    out << "ratio,severity,mean_delta\n";
    for (int r = 0; r < grid.ratios(); ++r)
        for (int l = 0; l < grid.severities(); ++l)
            out << format_double(grid.ratio_axis[static_cast<size_t>(r)]) << ','
                << format_double(grid.severity_axis[static_cast<size_t>(l)]) << ','
                << format_double(grid.mean_delta_rel(r, l)) << '\n';
    write_file(long_csv_path, out.str());
}

std::string histories_to_csv(const std::vector<NamedHistory>& histories) {
    std::ostringstream out;
    out << "run_id,round,metric\n";
    for (const NamedHistory& nh : histories)
        for (size_t r = 0; r < nh.history.metrics.size(); ++r)
            out << nh.run_id << ',' << r << ',' << format_double(nh.history.metrics[r]) << '\n';
    return out.str();
}

}  // namespace driftlab
