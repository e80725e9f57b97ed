#include "mnlb/harness.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "mnlb/errors.hpp"

namespace mnlb {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {
constexpr const char* kLibraryVersion = "mnlb 1.0.0";
}

void ExperimentSpec::validate() const {
    if (N < 1 || K < 1 || d < 1 || T < 1)
        throw ConfigError("N, K, d, T must be positive");
    if (K > N) throw ConfigError("K must not exceed N");
    if (algorithms.empty()) throw ConfigError("algorithms list must be nonempty");
    if (replications < 1) throw ConfigError("replications must be >= 1");
    if (trace_every < 1) throw ConfigError("trace_every must be >= 1");
    if (threads < 1) throw ConfigError("threads must be >= 1");
    if (output_dir.empty()) throw ConfigError("output_dir must be nonempty");
    if (sigma0 && !(*sigma0 > 0.0)) throw ConfigError("sigma0 must be positive");
    if (init_rounds && *init_rounds < 1) throw ConfigError("T0 must be >= 1");
    ConfidenceConfig probe;
    probe.kappa = kappa;
    probe.sigma0 = sigma0.value_or(0.2);
    probe.delta = delta;
    probe.validate();
    // Reject early what make_policy would reject later.
    context_dist_from_name(context_dist);
    revenue_mode_from_name(revenue_mode);
}

EnvironmentConfig ExperimentSpec::environment() const {
    EnvironmentConfig env;
    env.N = N;
    env.K = K;
    env.d = d;
    env.T = T;
    env.context_dist = context_dist_from_name(context_dist);
    env.revenue_mode = revenue_mode_from_name(revenue_mode);
    env.normalize_features = normalize_features;
    return env;
}

PolicyConfig ExperimentSpec::policy(Algorithm algorithm, double resolved_sigma0) const {
    PolicyConfig p;
    p.algorithm = algorithm;
    p.horizon = T;
    p.capacity = K;
    p.confidence.kappa = kappa;
    p.confidence.sigma0 = sigma0.value_or(resolved_sigma0);
    p.confidence.delta = delta;
    p.init_rounds = init_rounds;
    p.formal_constants = formal_constants;
    return p;
}

namespace {

std::uint64_t parse_seed(const json& value, const char* key) {
    if (value.is_number_unsigned()) return value.get<std::uint64_t>();
    if (value.is_number_integer()) {
        const auto v = value.get<std::int64_t>();
        if (v >= 0) return static_cast<std::uint64_t>(v);
    }
    throw ConfigError(std::string(key) + " must be a nonnegative integer");
}

int parse_int(const json& value, const char* key) {
    if (!value.is_number_integer())
        throw ConfigError(std::string(key) + " must be an integer");
    return value.get<int>();
}

double parse_number(const json& value, const char* key) {
    if (!value.is_number())
        throw ConfigError(std::string(key) + " must be a number");
    return value.get<double>();
}

bool parse_bool(const json& value, const char* key) {
    if (!value.is_boolean())
        throw ConfigError(std::string(key) + " must be a boolean");
    return value.get<bool>();
}

std::string parse_string(const json& value, const char* key) {
    if (!value.is_string())
        throw ConfigError(std::string(key) + " must be a string");
    return value.get<std::string>();
}

}  // namespace

ExperimentSpec parse_config_text(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("config root must be an object");

    static const std::vector<std::string> known = {
        "N", "K", "d", "T", "algorithms", "seed",
        "context_dist", "revenue_mode", "normalize_features",
        "kappa", "sigma0", "delta", "T0",
        "replications", "trace_every", "output_dir",
        "record_wall_time", "threads", "formal_constants"};
    for (const auto& [key, value] : root.items()) {
        (void)value;
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ConfigError("unknown config key: " + key);
    }
    for (const char* key : {"N", "K", "d", "T", "algorithms", "seed"})
        if (!root.contains(key))
            throw ConfigError(std::string("missing required key: ") + key);

    ExperimentSpec spec;
    spec.N = parse_int(root["N"], "N");
    spec.K = parse_int(root["K"], "K");
    spec.d = parse_int(root["d"], "d");
    spec.T = parse_int(root["T"], "T");
    spec.seed = parse_seed(root["seed"], "seed");

    if (!root["algorithms"].is_array())
        throw ConfigError("algorithms must be a list of names");
    for (const auto& entry : root["algorithms"])
        spec.algorithms.push_back(algorithm_from_name(parse_string(entry, "algorithms[]")));

    if (root.contains("context_dist"))
        spec.context_dist = parse_string(root["context_dist"], "context_dist");
    if (root.contains("revenue_mode"))
        spec.revenue_mode = parse_string(root["revenue_mode"], "revenue_mode");
    if (root.contains("normalize_features"))
        spec.normalize_features = parse_bool(root["normalize_features"], "normalize_features");
    if (root.contains("kappa")) spec.kappa = parse_number(root["kappa"], "kappa");
    if (root.contains("sigma0") && !root["sigma0"].is_null())
        spec.sigma0 = parse_number(root["sigma0"], "sigma0");
    if (root.contains("delta")) spec.delta = parse_number(root["delta"], "delta");
    if (root.contains("T0") && !root["T0"].is_null())
        spec.init_rounds = parse_int(root["T0"], "T0");
    if (root.contains("replications"))
        spec.replications = parse_int(root["replications"], "replications");
    if (root.contains("trace_every"))
        spec.trace_every = parse_int(root["trace_every"], "trace_every");
    if (root.contains("output_dir"))
        spec.output_dir = parse_string(root["output_dir"], "output_dir");
    if (root.contains("record_wall_time"))
        spec.record_wall_time = parse_bool(root["record_wall_time"], "record_wall_time");
    if (root.contains("threads")) spec.threads = parse_int(root["threads"], "threads");
    if (root.contains("formal_constants"))
        spec.formal_constants =
            parse_bool(root["formal_constants"], "formal_constants");

    spec.validate();
    return spec;
}

ExperimentSpec parse_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_config_text(buf.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

std::string serialize_spec(const ExperimentSpec& spec) {
    json root;
    root["N"] = spec.N;
    root["K"] = spec.K;
    root["d"] = spec.d;
    root["T"] = spec.T;
    json algs = json::array();
    for (Algorithm a : spec.algorithms) algs.push_back(algorithm_name(a));
    root["algorithms"] = algs;
    root["seed"] = spec.seed;
    root["context_dist"] = spec.context_dist;
    root["revenue_mode"] = spec.revenue_mode;
    root["normalize_features"] = spec.normalize_features;
    root["kappa"] = spec.kappa;
    if (spec.sigma0)
        root["sigma0"] = *spec.sigma0;
    else
        root["sigma0"] = nullptr;
    root["delta"] = spec.delta;
    if (spec.init_rounds)
        root["T0"] = *spec.init_rounds;
    else
        root["T0"] = nullptr;
    root["replications"] = spec.replications;
    root["trace_every"] = spec.trace_every;
    root["output_dir"] = spec.output_dir;
    root["record_wall_time"] = spec.record_wall_time;
    root["threads"] = spec.threads;
    root["formal_constants"] = spec.formal_constants;
    return root.dump(2) + "\n";
}

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", value);
    return buf;
}

namespace {

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void write_trace_csv(const std::string& path, const std::vector<RegretTrace>& traces,
                     bool record_wall_time) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write trace file: " + path);
    out << "replication,algorithm,t,episode_or_level,inst_regret,cum_regret,"
           "cum_wall_ns,flags\n";
    for (const auto& trace : traces) {
        for (const auto& row : trace.rows) {
            out << trace.replication << ',' << trace.algorithm << ',' << row.t << ','
                << csv_escape(row.episode_or_level) << ','
                << format_double(row.inst_regret) << ',' << format_double(row.cum_regret)
                << ',' << (record_wall_time ? row.cum_wall_ns : 0) << ','
                << csv_escape(row.flags) << '\n';
        }
    }
    if (!out) throw Error("write failed for trace file: " + path);
}

}  // namespace

std::string format_summary_csv(const std::vector<RunSummary>& summaries) {
    std::ostringstream out;
    out << "algorithm,T,replications,mean_final_regret,std_final_regret,mean_runtime_s\n";
    for (const auto& s : summaries) {
        out << s.algorithm << ',' << s.T << ',' << s.replications << ','
            << format_double(s.mean_final_regret) << ','
            << format_double(s.std_final_regret) << ','
            << format_double(s.mean_runtime_s) << '\n';
    }
    return out.str();
}

std::vector<RunSummary> run_experiment(const ExperimentSpec& spec,
                                       const RunOptions& options) {
    ExperimentSpec resolved = spec;
    if (options.output_dir) resolved.output_dir = *options.output_dir;
    if (options.threads) resolved.threads = *options.threads;
    if (options.trace_every) resolved.trace_every = *options.trace_every;
    resolved.validate();

    fs::create_directories(resolved.output_dir);

    // sigma0 depends only on the context distribution, not the replication.
    const EnvironmentConfig env_proto = resolved.environment();
    const double resolved_sigma0 =
        Environment(EnvironmentConfig::from_base_seed(env_proto, resolved.seed, 0))
            .sigma0();

    std::vector<RunSummary> summaries;
    json manifest;
    manifest["library"] = kLibraryVersion;
    manifest["spec"] = json::parse(serialize_spec(resolved));
    manifest["resolved_sigma0"] = resolved_sigma0;
    json seeds = json::array();
    for (int r = 0; r < resolved.replications; ++r) {
        const EnvironmentConfig cfg = EnvironmentConfig::from_base_seed(
            env_proto, resolved.seed, static_cast<std::uint64_t>(r));
        json entry;
        entry["replication"] = r;
        entry["theta_star_seed"] = cfg.theta_star_seed;
        entry["context_seed"] = cfg.context_seed;
        entry["choice_seed"] = cfg.choice_seed;
        entry["policy_seed"] = cfg.policy_seed;
        seeds.push_back(entry);
    }
    manifest["replication_seeds"] = seeds;

    json outputs = json::array();
    for (Algorithm algorithm : resolved.algorithms) {
        const PolicyConfig pcfg = resolved.policy(algorithm, resolved_sigma0);
        auto [traces, summary] =
            run_replications(env_proto, pcfg, resolved.seed, resolved.replications,
                             resolved.trace_every, resolved.threads);
        const std::string trace_path =
            (fs::path(resolved.output_dir) /
             (std::string("trace_") + algorithm_name(algorithm) + ".csv"))
                .string();
        write_trace_csv(trace_path, traces, resolved.record_wall_time);
        outputs.push_back(trace_path);
        summaries.push_back(summary);
    }

    const std::string summary_path =
        (fs::path(resolved.output_dir) / "summary.csv").string();
    {
        std::ofstream out(summary_path, std::ios::binary);
        if (!out) throw Error("cannot write summary file: " + summary_path);
        // wall-clock columns are zeroed unless requested, keeping reruns
        // byte-identical
        std::vector<RunSummary> on_disk = summaries;
        if (!resolved.record_wall_time)
            for (RunSummary& s : on_disk) s.mean_runtime_s = 0.0;
        out << format_summary_csv(on_disk);
    }
    outputs.push_back(summary_path);
    manifest["outputs"] = outputs;

    const std::string manifest_path =
        (fs::path(resolved.output_dir) / "manifest.json").string();
    std::ofstream mout(manifest_path, std::ios::binary);
    if (!mout) throw Error("cannot write manifest: " + manifest_path);
    mout << manifest.dump(2) << '\n';

    return summaries;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field += c;
        }
    }
    fields.push_back(std::move(field));
    return fields;
}

}  // namespace

std::vector<RunSummary> summarize_trace_files(const std::vector<std::string>& paths) {
    // (algorithm, replication) -> last seen (t, cum_regret, cum_wall_ns)
    struct Final {
        int t = 0;
        double cum_regret = 0.0;
        double wall_s = 0.0;
    };
    std::map<std::string, std::map<int, Final>> finals;
    std::map<std::string, int> horizons;

    for (const auto& path : paths) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw Error("cannot open trace file: " + path);
        std::string line;
        if (!std::getline(in, line)) throw Error("empty trace file: " + path);
        int lineno = 1;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            const auto fields = split_csv_line(line);
            if (fields.size() != 8)
                throw Error(path + ":" + std::to_string(lineno) +
                            ": expected 8 CSV fields");
            const int replication = std::stoi(fields[0]);
            const std::string& algorithm = fields[1];
            const int t = std::stoi(fields[2]);
            const double cum_regret = std::stod(fields[5]);
            const double wall_s = std::stod(fields[6]) * 1e-9;
            auto& entry = finals[algorithm][replication];
            if (t >= entry.t) entry = Final{t, cum_regret, wall_s};
            horizons[algorithm] = std::max(horizons[algorithm], t);
        }
    }

    std::vector<RunSummary> summaries;
    for (const auto& [algorithm, by_rep] : finals) {
        std::vector<RegretTrace> traces;
        for (const auto& [rep, fin] : by_rep) {
            RegretTrace tr;
            tr.algorithm = algorithm;
            tr.replication = rep;
            tr.final_cum_regret = fin.cum_regret;
            tr.total_wall_ns = static_cast<std::uint64_t>(fin.wall_s * 1e9);
            traces.push_back(std::move(tr));
        }
        summaries.push_back(summarize_traces(algorithm, horizons[algorithm], traces));
    }
    return summaries;
}

}  // namespace mnlb
