// Command line front end: config-driven runs of the simulation, certificate,
// Legendre-table and verification pipelines. Flags override MFC_SEED, which
// overrides the config file.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mfc/run.hpp"

namespace {

struct FlagValues {
    std::string config_file;
    std::string model_file;
    std::string output_dir;
    std::optional<int> particles;
    std::optional<int> replications;
    std::optional<int> horizon;
    std::optional<int> threads;
    std::optional<std::uint64_t> seed;
    std::vector<double> xs;
    std::vector<double> x_grid;
    std::vector<std::int64_t> n_grid;
    bool aggregate = false;
};

void add_common_flags(CLI::App* cmd, FlagValues& flags) {
    cmd->add_option("--config", flags.config_file, "JSON config file");
    cmd->add_option("--model", flags.model_file, "model (or params) JSON file");
    cmd->add_option("--output-dir", flags.output_dir, "output directory");
    cmd->add_option("--N", flags.particles, "particle count");
    cmd->add_option("--R", flags.replications, "replication count");
    cmd->add_option("--horizon", flags.horizon, "number of generations");
    cmd->add_option("--seed", flags.seed, "master seed (beats MFC_SEED)");
    cmd->add_option("--threads", flags.threads, "worker threads (0 = machine parallelism)");
    cmd->add_option("--xs", flags.xs, "inverse-table inputs")->delimiter(',');
    cmd->add_option("--x-grid", flags.x_grid, "tail levels x")->delimiter(',');
    cmd->add_option("--N-grid", flags.n_grid, "particle counts for certify")->delimiter(',');
    cmd->add_flag("--aggregate", flags.aggregate, "simulate: also write per-generation statistics");
}

int dispatch(mfc::Subcommand subcommand, const FlagValues& flags) {
    mfc::RunConfig config;
    if (!flags.config_file.empty()) config = mfc::load_run_config(flags.config_file);
    config.subcommand = subcommand;
    mfc::apply_env_overrides(config);
    if (!flags.model_file.empty()) config.model_file = flags.model_file;
    if (!flags.output_dir.empty()) config.output_dir = flags.output_dir;
    if (flags.particles) config.particles = flags.particles;
    if (flags.replications) config.replications = flags.replications;
    if (flags.horizon) config.horizon = flags.horizon;
    if (flags.threads) config.threads = flags.threads;
    if (flags.seed) config.seed = flags.seed;
    if (!flags.xs.empty()) config.xs = flags.xs;
    if (!flags.x_grid.empty()) config.x_grid = flags.x_grid;
    if (!flags.n_grid.empty()) config.n_grid = flags.n_grid;
    if (flags.aggregate) config.aggregate = true;
    return mfc::run(config);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mean field particle simulation and concentration certificates"};
    app.require_subcommand(1);

    FlagValues flags;
    auto* simulate = app.add_subcommand("simulate", "run particle trajectories to CSV");
    auto* certify = app.add_subcommand("certify", "tabulate concentration certificates");
    auto* legendre = app.add_subcommand("legendre", "tabulate conjugate inverses with brackets");
    auto* verify = app.add_subcommand("verify", "run the statistical verification suite");
    for (auto* cmd : {simulate, certify, legendre, verify}) add_common_flags(cmd, flags);

    CLI11_PARSE(app, argc, argv);

    if (simulate->parsed()) return dispatch(mfc::Subcommand::Simulate, flags);
    if (certify->parsed()) return dispatch(mfc::Subcommand::Certify, flags);
    if (legendre->parsed()) return dispatch(mfc::Subcommand::Legendre, flags);
    return dispatch(mfc::Subcommand::Verify, flags);
}
