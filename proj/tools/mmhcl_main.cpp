// Command line front end: prepare | train | evaluate | sweep.
// Exit codes: 0 success, 2 configuration error, 3 data error.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mmhcl/mmhcl.hpp"

namespace {

struct CommonOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> ablate;
    std::optional<std::string> preset;
};

void add_common(CLI::App* cmd, CommonOptions& opt) {
    cmd->add_option("--config", opt.config_path, "Path to the run config JSON")->required();
    cmd->add_option("--seed", opt.seed, "Override the run seed");
    cmd->add_option("--ablate", opt.ablate, "Disable a component: u2u, i2i, or scl (repeatable)");
    cmd->add_option("--preset", opt.preset,
                    "Apply a named hyperparameter preset: tiktok, clothing, sports, synthetic");
}

mmhcl::RunConfig build_config(const CommonOptions& opt) {
    mmhcl::RunConfig rc = mmhcl::load_run_config(opt.config_path, opt.preset);
    if (opt.seed) rc.model.seed = *opt.seed;
    for (const std::string& a : opt.ablate) {
        if (a == "u2u")
            rc.model.use_u2u = false;
        else if (a == "i2i")
            rc.model.use_i2i = false;
        else if (a == "scl")
            rc.model.use_scl = false;
        else
            throw mmhcl::ConfigError("unknown --ablate target: " + a +
                                     " (expected u2u, i2i, or scl)");
    }
    rc.model.validate();
    return rc;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mmhcl: multimodal hypergraph contrastive recommender"};
    app.require_subcommand(1);

    CommonOptions prep_opt, train_opt, eval_opt, sweep_opt;
    std::optional<std::size_t> k;
    std::optional<double> cold_start;

    CLI::App* prepare = app.add_subcommand("prepare", "Build split, mappings, and graph operators");
    add_common(prepare, prep_opt);
    CLI::App* train = app.add_subcommand("train", "Train on prepared artifacts");
    add_common(train, train_opt);
    CLI::App* evaluate = app.add_subcommand("evaluate", "Score the test split");
    add_common(evaluate, eval_opt);
    evaluate->add_option("--k", k, "Ranking cutoff (default 20)");
    evaluate->add_option("--cold-start", cold_start,
                         "Run the item cold-start protocol with this removal ratio in (0,1)");
    CLI::App* sweep = app.add_subcommand("sweep", "Grid search over the config's sweep axes");
    add_common(sweep, sweep_opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (prepare->parsed()) {
            mmhcl::run_prepare(build_config(prep_opt));
        } else if (train->parsed()) {
            mmhcl::run_train(build_config(train_opt));
        } else if (evaluate->parsed()) {
            mmhcl::run_evaluate(build_config(eval_opt), k, cold_start);
        } else if (sweep->parsed()) {
            mmhcl::run_sweep(build_config(sweep_opt));
        }
    } catch (const mmhcl::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const mmhcl::ParamError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const mmhcl::DataError& e) {  // covers format and io errors
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const mmhcl::ShapeError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
