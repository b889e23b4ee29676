// Command-line front end: six subcommands sharing one run configuration.
// Exit status is 0 exactly when the requested command succeeds.

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "glue/commands.hpp"
#include "glue/config.hpp"
#include "glue/error.hpp"

namespace {

struct GlobalArgs {
    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir;
    unsigned threads = 1;
    CLI::Option* config_opt = nullptr;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* out_opt = nullptr;
    CLI::Option* threads_opt = nullptr;
};

glue::RunConfig effective_config(const GlobalArgs& args) {
    glue::RunConfig cfg;
    if (args.config_opt->count() > 0) {
        cfg = glue::load_run_config(args.config_path);
    } else {
        // No file: defaults, still honoring GLUE_* environment overrides.
        glue::IniFile ini;
        glue::apply_env_overrides(ini, {"run", "model", "train", "baselines"});
        cfg = glue::run_config_from_ini(ini, "(defaults)");
    }
    if (args.seed_opt->count() > 0) cfg.seed = args.seed;
    if (args.out_opt->count() > 0) cfg.out_dir = args.out_dir;
    if (args.threads_opt->count() > 0) cfg.threads = args.threads;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"anomaly detection over learned sensor dependency graphs"};
    app.require_subcommand(1);

    GlobalArgs args;
    args.config_opt = app.add_option("--config", args.config_path,
                                     "run configuration file (INI)");
    args.seed_opt = app.add_option("--seed", args.seed, "override the run seed");
    args.out_opt = app.add_option("--out-dir", args.out_dir,
                                  "override the output directory");
    args.threads_opt = app.add_option("--threads", args.threads,
                                      "worker threads for forward/backward passes");

    struct Sub {
        const char* name;
        const char* help;
        void (*run)(const glue::RunConfig&);
    };
    const Sub subs[] = {
        {"preprocess", "load manifest CSVs and persist the preprocessed bundle",
         &glue::cmd_preprocess},
        {"train", "train the graph forecaster and write a checkpoint", &glue::cmd_train},
        {"detect", "score the test split and write the anomaly report", &glue::cmd_detect},
        {"evaluate", "recompute metrics from a finished detection report",
         &glue::cmd_evaluate},
        {"compare", "run graph models plus selected baselines and tabulate",
         &glue::cmd_compare},
        {"export", "dump embeddings, 2-D projection and the learned graph",
         &glue::cmd_export},
    };
    for (const Sub& sub : subs) {
        CLI::App* cmd = app.add_subcommand(sub.name, sub.help);
        cmd->fallthrough();  // global flags may follow the subcommand name
        void (*run)(const glue::RunConfig&) = sub.run;
        cmd->callback([&args, run]() { run(effective_config(args)); });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const glue::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
