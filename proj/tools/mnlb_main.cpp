#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <glob.h>

#include <CLI11.hpp>

#include "mnlb/errors.hpp"
#include "mnlb/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitGuard = 4;

std::vector<std::string> expand_glob(const std::string& pattern) {
    glob_t result{};
    const int rc = glob(pattern.c_str(), 0, nullptr, &result);
    std::vector<std::string> paths;
    if (rc == 0) {
        for (std::size_t i = 0; i < result.gl_pathc; ++i)
            paths.emplace_back(result.gl_pathv[i]);
    }
    globfree(&result);
    if (rc != 0 && rc != GLOB_NOMATCH)
        throw mnlb::Error("glob failed for pattern: " + pattern);
    return paths;
}

int default_threads() {
    if (const char* env = std::getenv("MNLB_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n >= 1) return n;
        } catch (...) {
        }
        std::cerr << "warning: ignoring invalid MNLB_THREADS=" << env << "\n";
    }
    return 0;  // 0 means "use the config value"
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Contextual MNL bandit simulation harness"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    int threads = 0;
    int trace_every = 0;

    auto* run = app.add_subcommand("run", "Execute an experiment config");
    run->add_option("config", config_path, "Experiment config file (JSON)")->required();
    run->add_option("--out", out_dir, "Output directory override");
    run->add_option("--threads", threads, "Replication thread count override");
    run->add_option("--trace-every", trace_every, "Trace row decimation override");

    std::string trace_glob;
    auto* summarize = app.add_subcommand("summarize", "Aggregate trace CSVs");
    summarize->add_option("trace-glob", trace_glob, "Glob of trace CSV files")
        ->required();

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "Check a config without running");
    validate->add_option("config", validate_path, "Experiment config file (JSON)")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            mnlb::ExperimentSpec spec = mnlb::parse_config(config_path);
            mnlb::RunOptions options;
            if (!out_dir.empty()) options.output_dir = out_dir;
            const int env_threads = default_threads();
            if (threads > 0)
                options.threads = threads;
            else if (env_threads > 0)
                options.threads = env_threads;
            if (trace_every > 0) options.trace_every = trace_every;
            const auto summaries = mnlb::run_experiment(spec, options);
            std::cout << mnlb::format_summary_csv(summaries);
            return kExitOk;
        }
        if (summarize->parsed()) {
            const auto paths = expand_glob(trace_glob);
            if (paths.empty()) {
                std::cerr << "error: no trace files match " << trace_glob << "\n";
                return kExitRuntime;
            }
            const auto summaries = mnlb::summarize_trace_files(paths);
            std::cout << mnlb::format_summary_csv(summaries);
            return kExitOk;
        }
        if (validate->parsed()) {
            mnlb::ExperimentSpec spec = mnlb::parse_config(validate_path);
            std::cout << mnlb::serialize_spec(spec);
            return kExitOk;
        }
    } catch (const mnlb::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const mnlb::GuardExceededError& e) {
        std::cerr << "guard exceeded: " << e.what() << "\n";
        return kExitGuard;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitRuntime;
}
