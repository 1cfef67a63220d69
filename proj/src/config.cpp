#include "driftlab/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "driftlab/errors.hpp"

namespace driftlab {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> items;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) items.push_back(item);
    }
    return items;
}

long long to_int(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        long long v = std::stoll(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": expected an integer, got '" + value + "'");
    }
}

uint64_t to_u64(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        unsigned long long v = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": expected an unsigned integer, got '" + value +
                          "'");
    }
}

double to_double(const std::string& key, const std::string& value) {
    try {
        size_t pos = 0;
        double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": expected a number, got '" + value + "'");
    }
}

bool to_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("config key " + key + ": expected true/false, got '" + value + "'");
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void RunConfig::validate() const {
    fed.validate();
    if (seeds.empty()) throw ConfigError("need at least one seed");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (ablation_rounds_cd < 1 || ablation_rounds_cf < 1)
        throw ConfigError("ablation round counts must be >= 1");
    if (out_dir.empty()) throw ConfigError("output directory must not be empty");
}

RunConfig default_run_config() { return RunConfig{}; }

std::vector<uint64_t> parse_seed_list(const std::string& text) {
    std::vector<uint64_t> seeds;
    for (const std::string& item : split_list(text)) seeds.push_back(to_u64("seeds", item));
    if (seeds.empty()) throw ConfigError("seed list is empty");
    return seeds;
}

std::vector<CorruptionKind> parse_kind_list(const std::string& text) {
    std::vector<CorruptionKind> kinds;
    for (const std::string& item : split_list(text)) kinds.push_back(corruption_kind_from_name(item));
    if (kinds.empty()) throw ConfigError("corruption kind list is empty");
    return kinds;
}

void apply_config_text(RunConfig& cfg, const std::string& text, const std::string& source) {
    std::istringstream in(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        size_t hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(source + ":" + std::to_string(line_no) +
                                  ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section != "task" && section != "model" && section != "federation" &&
                section != "corruption" && section != "experiment")
                throw ConfigError(source + ": unknown config section [" + section + "]");
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(source + ":" + std::to_string(line_no) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        std::string full = "[" + section + "] " + key;

        if (section == "task") {
            if (key == "kind") cfg.fed.task = task_kind_from_name(value);
            else if (key == "samples") cfg.fed.dataset_samples = static_cast<int>(to_int(full, value));
            else if (key == "height") cfg.fed.height = static_cast<int>(to_int(full, value));
            else if (key == "width") cfg.fed.width = static_cast<int>(to_int(full, value));
            else if (key == "classes") cfg.fed.num_classes = static_cast<int>(to_int(full, value));
            else if (key == "noise_sigma") cfg.fed.noise_sigma = to_double(full, value);
            else if (key == "test_fraction") cfg.fed.test_fraction = to_double(full, value);
            else throw ConfigError(source + ": unknown config key " + full);
        } else if (section == "model") {
            if (key == "hidden") {
                cfg.fed.hidden_dims.clear();
                for (const std::string& item : split_list(value))
                    cfg.fed.hidden_dims.push_back(static_cast<int>(to_int(full, item)));
            } else {
                throw ConfigError(source + ": unknown config key " + full);
            }
        } else if (section == "federation") {
            if (key == "clients") cfg.fed.total_clients = static_cast<int>(to_int(full, value));
            else if (key == "clients_per_round")
                cfg.fed.clients_per_round = static_cast<int>(to_int(full, value));
            else if (key == "local_epochs") cfg.fed.local_epochs = static_cast<int>(to_int(full, value));
            else if (key == "lr") cfg.fed.lr = to_double(full, value);
            else if (key == "batch_size") cfg.fed.batch_size = static_cast<int>(to_int(full, value));
            else if (key == "rounds_cd") cfg.fed.rounds_cd = static_cast<int>(to_int(full, value));
            else if (key == "rounds_cf") cfg.fed.rounds_cf = static_cast<int>(to_int(full, value));
            else if (key == "rehearsal_fraction") cfg.fed.rehearsal_fraction = to_double(full, value);
            else throw ConfigError(source + ": unknown config key " + full);
        } else if (section == "corruption") {
            if (key == "kinds") cfg.fed.corruption_kinds = parse_kind_list(value);
            else if (key == "per_client_kind") cfg.fed.per_client_kind = to_bool(full, value);
            else if (key == "opacity") cfg.fed.occlusion_opacity = to_double(full, value);
            else if (key == "salt") cfg.fed.corruption_salt = to_u64(full, value);
            else throw ConfigError(source + ": unknown config key " + full);
        } else if (section == "experiment") {
            if (key == "seeds") cfg.seeds = parse_seed_list(value);
            else if (key == "workers") cfg.workers = static_cast<int>(to_int(full, value));
            else if (key == "ablation_rounds_cd")
                cfg.ablation_rounds_cd = static_cast<int>(to_int(full, value));
            else if (key == "ablation_rounds_cf")
                cfg.ablation_rounds_cf = static_cast<int>(to_int(full, value));
            else throw ConfigError(source + ": unknown config key " + full);
        } else {
            throw ConfigError(source + ":" + std::to_string(line_no) +
                              ": key outside any section: " + key);
        }
    }
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    RunConfig cfg = default_run_config();
    apply_config_text(cfg, buffer.str(), path);
    return cfg;
}

std::string dump_config(const RunConfig& cfg) {
    std::ostringstream out;
    out << "[task]\n";
    out << "kind = " << task_kind_name(cfg.fed.task) << "\n";
    out << "samples = " << cfg.fed.dataset_samples << "  # 0 = task default\n";
    out << "height = " << cfg.fed.height << "\n";
    out << "width = " << cfg.fed.width << "\n";
    out << "classes = " << cfg.fed.num_classes << "\n";
    out << "noise_sigma = " << fmt_double(cfg.fed.noise_sigma) << "\n";
    out << "test_fraction = " << fmt_double(cfg.fed.test_fraction) << "\n";
    out << "\n[model]\n";
    out << "hidden = ";
    for (size_t i = 0; i < cfg.fed.hidden_dims.size(); ++i)
        out << (i ? "," : "") << cfg.fed.hidden_dims[i];
    out << "\n";
    out << "\n[federation]\n";
    out << "clients = " << cfg.fed.total_clients << "\n";
    out << "clients_per_round = " << cfg.fed.clients_per_round << "\n";
    out << "local_epochs = " << cfg.fed.local_epochs << "\n";
    out << "lr = " << fmt_double(cfg.fed.lr) << "\n";
    out << "batch_size = " << cfg.fed.batch_size << "\n";
    out << "rounds_cd = " << cfg.fed.rounds_cd << "\n";
    out << "rounds_cf = " << cfg.fed.rounds_cf << "\n";
    out << "rehearsal_fraction = " << fmt_double(cfg.fed.rehearsal_fraction) << "\n";
    out << "\n[corruption]\n";
    out << "kinds = ";
    for (size_t i = 0; i < cfg.fed.corruption_kinds.size(); ++i)
        out << (i ? "," : "") << corruption_kind_name(cfg.fed.corruption_kinds[i]);
    out << "\n";
    out << "per_client_kind = " << (cfg.fed.per_client_kind ? "true" : "false") << "\n";
    out << "opacity = " << fmt_double(cfg.fed.occlusion_opacity) << "\n";
    out << "salt = " << cfg.fed.corruption_salt << "\n";
    out << "\n[experiment]\n";
    out << "seeds = ";
    for (size_t i = 0; i < cfg.seeds.size(); ++i) out << (i ? "," : "") << cfg.seeds[i];
    out << "\n";
    out << "workers = " << cfg.workers << "\n";
    out << "ablation_rounds_cd = " << cfg.ablation_rounds_cd << "\n";
    out << "ablation_rounds_cf = " << cfg.ablation_rounds_cf << "\n";
    return out.str();
}

std::string config_to_json(const RunConfig& cfg) {
    std::ostringstream out;
    out << "{";
    out << "\"task\":{\"kind\":\"" << task_kind_name(cfg.fed.task) << "\""
        << ",\"samples\":" << cfg.fed.resolved_dataset_samples()
        << ",\"height\":" << cfg.fed.height << ",\"width\":" << cfg.fed.width
        << ",\"classes\":" << cfg.fed.num_classes
        << ",\"noise_sigma\":" << fmt_double(cfg.fed.noise_sigma)
        << ",\"test_fraction\":" << fmt_double(cfg.fed.test_fraction) << "},";
    out << "\"model\":{\"hidden\":[";
    for (size_t i = 0; i < cfg.fed.hidden_dims.size(); ++i)
        out << (i ? "," : "") << cfg.fed.hidden_dims[i];
    out << "]},";
    out << "\"federation\":{\"clients\":" << cfg.fed.total_clients
        << ",\"clients_per_round\":" << cfg.fed.clients_per_round
        << ",\"local_epochs\":" << cfg.fed.local_epochs << ",\"lr\":" << fmt_double(cfg.fed.lr)
        << ",\"batch_size\":" << cfg.fed.batch_size << ",\"rounds_cd\":" << cfg.fed.rounds_cd
        << ",\"rounds_cf\":" << cfg.fed.rounds_cf
        << ",\"rehearsal_fraction\":" << fmt_double(cfg.fed.rehearsal_fraction) << "},";
    out << "\"corruption\":{\"kinds\":[";
    for (size_t i = 0; i < cfg.fed.corruption_kinds.size(); ++i)
        out << (i ? "," : "") << "\"" << corruption_kind_name(cfg.fed.corruption_kinds[i]) << "\"";
    out << "],\"per_client_kind\":" << (cfg.fed.per_client_kind ? "true" : "false")
        << ",\"opacity\":" << fmt_double(cfg.fed.occlusion_opacity)
        << ",\"salt\":" << cfg.fed.corruption_salt << "},";
    out << "\"experiment\":{\"seeds\":[";
    for (size_t i = 0; i < cfg.seeds.size(); ++i) out << (i ? "," : "") << cfg.seeds[i];
    out << "],\"workers\":" << cfg.workers
        << ",\"ablation_rounds_cd\":" << cfg.ablation_rounds_cd
        << ",\"ablation_rounds_cf\":" << cfg.ablation_rounds_cf << "}";
    out << "}";
    return out.str();
}

}  // namespace driftlab
