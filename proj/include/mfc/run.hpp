#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mfc {

enum class Subcommand { Simulate, Certify, Legendre, Verify };

/// Fully resolved invocation. Loadable from a JSON config file; the CLI then
/// layers MFC_SEED and explicit flags on top (flags beat the environment,
/// the environment beats the file).
struct RunConfig {
    Subcommand subcommand = Subcommand::Verify;
    std::string model_file;  // the params file for certify; unused by legendre
    std::string output_dir = ".";
    std::optional<int> particles;
    std::optional<int> replications;
    std::optional<int> horizon;
    std::optional<int> threads;
    std::optional<std::uint64_t> seed;
    std::vector<double> x_grid;        // verify and certify tail levels
    std::vector<double> xs;            // legendre inputs
    std::vector<std::int64_t> n_grid;  // certify particle counts
    bool aggregate = false;            // simulate: also write per-generation statistics
};

RunConfig parse_run_config_json(const std::string& text, const std::string& origin = "<string>");
RunConfig load_run_config(const std::string& path);

/// MFC_SEED environment override.
void apply_env_overrides(RunConfig& config);

/// Execute one subcommand: writes its artifacts plus a manifest into
/// output_dir. Returns 0 on success, 1 on any validation error (message on
/// stderr), 2 when a verify check fails.
int run(const RunConfig& config);

}  // namespace mfc
