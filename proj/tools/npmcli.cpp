// Experiment runner for the noisy power method library: executes configured
// runs, prints noise budgets, aggregates traces and checks stream tails.

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <omp.h>

#include "npm/experiment.hpp"

namespace {

void apply_thread_cap() {
    const char* env = std::getenv("NPM_THREADS");
    if (env == nullptr) return;
    const int n = std::atoi(env);
    if (n >= 1) omp_set_num_threads(n);
}

int cmd_run(const std::string& config_path) {
    npm::ExperimentConfig cfg = npm::load_config(config_path);
    npm::ExperimentReport report = npm::run_experiment(cfg);
    std::cout << "completed " << report.runs.size() << " runs\n";
    std::cout << "traces in " << cfg.output_dir << "\n";
    std::cout << "run rows: " << report.runs_csv_path << "\n";
    return 0;
}

int cmd_summarize(const std::string& dir) {
    const std::string path = npm::summarize_directory(dir);
    std::cout << "summary: " << path << "\n";
    return 0;
}

int cmd_budget(const std::string& config_path) {
    npm::ExperimentConfig cfg = npm::load_config(config_path);
    npm::BudgetPrintout b = npm::compute_budgets(cfg);
    std::cout << "sigma_k                = " << npm::format_real(b.sigma_k) << "\n";
    std::cout << "sigma_{q+1}            = " << npm::format_real(b.sigma_q1) << "\n";
    std::cout << "gap-dependent budget (epsilon=" << npm::format_real(cfg.run.epsilon)
              << ", tau=" << npm::format_real(cfg.run.tau) << "):\n";
    std::cout << "  bound_g2             = " << npm::format_real(b.gap_dependent.bound_g2) << "\n";
    std::cout << "  bound_uqg            = " << npm::format_real(b.gap_dependent.bound_uqg)
              << "\n";
    std::cout << "  iterations           = " << b.gap_dependent.iterations << "\n";
    std::cout << "  epsilon_admissible   = " << (b.gap_dependent.epsilon_admissible ? "yes" : "no")
              << "\n";
    std::cout << "gap-independent budget:\n";
    std::cout << "  bound_g2             = " << npm::format_real(b.gap_independent.bound_g2)
              << "\n";
    std::cout << "  bound_uqg            = " << npm::format_real(b.gap_independent.bound_uqg)
              << "\n";
    std::cout << "  iterations           = " << b.gap_independent.iterations << "\n";
    std::cout << "iterations (log d rule) = " << b.iterations_log_d << "\n";
    return 0;
}

int cmd_check_round(const std::string& config_path) {
    npm::ExperimentConfig cfg = npm::load_config(config_path);
    npm::RoundCheckReport report = npm::run_round_check(cfg);
    std::cout << "B=" << npm::format_real(report.b) << " p=" << report.p << "\n";
    std::cout << "t,freq_norm,freq_proj,limit,pass\n";
    for (std::size_t i = 0; i < report.t_grid.size(); ++i) {
        std::cout << npm::format_real(report.t_grid[i]) << ','
                  << npm::format_real(report.freq_norm[i]) << ','
                  << npm::format_real(report.freq_proj[i]) << ','
                  << npm::format_real(std::exp(-report.t_grid[i])) << ','
                  << (report.pass[i] ? "yes" : "no") << "\n";
    }
    std::cout << (report.all_pass ? "all t passed" : "some t failed") << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    apply_thread_cap();

    CLI::App app{"noisy power method experiment runner"};
    app.require_subcommand(1);

    std::string run_config, budget_config, round_config, summarize_dir;
    CLI::App* run = app.add_subcommand("run", "execute the runs described by a config file");
    run->add_option("config", run_config, "config file (JSON)")->required();
    CLI::App* summarize = app.add_subcommand("summarize", "aggregate a directory of trace files");
    summarize->add_option("dir", summarize_dir, "directory containing trace CSVs")->required();
    CLI::App* budget = app.add_subcommand("budget", "print noise budgets and iteration counts");
    budget->add_option("config", budget_config, "config file (JSON)")->required();
    CLI::App* check_round =
        app.add_subcommand("check-round", "empirical tail check of the configured stream");
    check_round->add_option("config", round_config, "config file (JSON)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (run->parsed()) return cmd_run(run_config);
        if (summarize->parsed()) return cmd_summarize(summarize_dir);
        if (budget->parsed()) return cmd_budget(budget_config);
        if (check_round->parsed()) return cmd_check_round(round_config);
    } catch (const npm::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const npm::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
