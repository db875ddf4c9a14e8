#include "mfc/run.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <stdexcept>

#include "json.hpp"
#include "mfc/csv.hpp"
#include "mfc/engine.hpp"
#include "mfc/model_io.hpp"
#include "mfc/verify.hpp"

namespace mfc {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr const char* kConfigSchema = "mfc.config.v1";

const char* subcommand_name(Subcommand s) {
    switch (s) {
        case Subcommand::Simulate: return "simulate";
        case Subcommand::Certify: return "certify";
        case Subcommand::Legendre: return "legendre";
        case Subcommand::Verify: return "verify";
    }
    return "?";
}

Subcommand parse_subcommand(const std::string& name, const std::string& origin) {
    if (name == "simulate") return Subcommand::Simulate;
    if (name == "certify") return Subcommand::Certify;
    if (name == "legendre") return Subcommand::Legendre;
    if (name == "verify") return Subcommand::Verify;
    throw std::runtime_error(origin + ": unknown subcommand \"" + name + "\"");
}

std::string timestamp_utc() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

/// Fill in every default the subcommand would otherwise apply, so the
/// manifest echoes exactly what the run used.
RunConfig resolve_defaults(const RunConfig& config, const ModelFile* model) {
    RunConfig resolved = config;
    if (!resolved.seed) resolved.seed = 0;
    if (!resolved.threads) resolved.threads = 0;
    switch (resolved.subcommand) {
        case Subcommand::Legendre:
            if (resolved.xs.empty()) {
                // 50-point log grid over [1e-6, 1e3].
                const double lo = std::log(1e-6);
                const double hi = std::log(1e3);
                for (int i = 0; i < 50; ++i)
                    resolved.xs.push_back(std::exp(lo + (hi - lo) * i / 49.0));
            }
            break;
        case Subcommand::Certify:
            if (resolved.x_grid.empty()) resolved.x_grid = {0.5, 1.0, 2.0, 3.0};
            if (resolved.n_grid.empty()) resolved.n_grid = {100, 1000, 10000};
            break;
        case Subcommand::Simulate:
            if (!resolved.particles) resolved.particles = 1000;
            if (!resolved.replications) resolved.replications = 1;
            break;
        case Subcommand::Verify:
            if (!resolved.particles) resolved.particles = 1000;
            if (!resolved.replications) resolved.replications = 200;
            if (resolved.x_grid.empty()) resolved.x_grid = {0.5, 1.0, 2.0, 3.0};
            break;
    }
    if (model && !resolved.horizon) resolved.horizon = model->horizon;
    return resolved;
}

void write_manifest(const RunConfig& config) {
    ordered_json doc;
    doc["schema_version"] = "mfc.manifest.v1";
    doc["subcommand"] = subcommand_name(config.subcommand);
    doc["model_file"] = config.model_file;
    doc["output_dir"] = config.output_dir;
    ordered_json resolved;
    resolved["seed"] = *config.seed;
    resolved["threads"] = *config.threads;
    if (config.particles) resolved["N"] = *config.particles;
    if (config.replications) resolved["R"] = *config.replications;
    if (config.horizon) resolved["horizon"] = *config.horizon;
    if (!config.x_grid.empty()) resolved["x_grid"] = config.x_grid;
    if (!config.xs.empty()) resolved["xs"] = config.xs;
    if (!config.n_grid.empty()) resolved["N_grid"] = config.n_grid;
    resolved["aggregate"] = config.aggregate;
    doc["resolved"] = std::move(resolved);
    doc["timestamp"] = timestamp_utc();
    write_file(config.output_dir + "/manifest.json", doc.dump(2) + "\n");
}

int run_legendre(const RunConfig& config) {
    std::string csv = "# schema: mfc.legendre.v1\nx,id,value,lower,upper,iterations\n";
    for (double x : config.xs) {
        for (auto [id, name] : {std::pair{ConvexFunctionId::Alpha0, "alpha0"},
                                std::pair{ConvexFunctionId::Alpha1, "alpha1"}}) {
            const InverseResult r = inverse(id, x);
            csv += format_double(x);
            csv += ',';
            csv += name;
            csv += ',';
            csv += format_double(r.value);
            csv += ',';
            csv += format_double(r.lower);
            csv += ',';
            csv += format_double(r.upper);
            csv += ',';
            csv += std::to_string(r.iterations);
            csv += '\n';
        }
    }
    write_file(config.output_dir + "/legendre.csv", csv);
    return 0;
}

int run_certify(const RunConfig& config) {
    if (config.model_file.empty())
        throw std::runtime_error("certify: a params file is required (model_file)");
    const ConcentrationParams params = load_params_file(config.model_file);
    std::string csv =
        "# schema: mfc.certify.v1\nx,N,bennett,hoeffding,bernstein_rate1,bernstein_rate2\n";
    for (double x : config.x_grid) {
        for (std::int64_t n : config.n_grid) {
            const CertificateLevels levels = certificate_levels(params, x, n);
            // The Bernstein columns read the row's x as the deviation size.
            const BernsteinRates rates = bernstein_rates(params, x, n);
            csv += format_double(x);
            csv += ',';
            csv += std::to_string(n);
            csv += ',';
            csv += format_double(levels.bennett_eta);
            csv += ',';
            csv += format_double(levels.hoeffding_eta);
            csv += ',';
            csv += format_double(rates.rate1);
            csv += ',';
            csv += format_double(rates.rate2);
            csv += '\n';
        }
    }
    write_file(config.output_dir + "/certificates.csv", csv);
    return 0;
}

int run_simulate(const RunConfig& config, const ModelFile& file) {
    SimulationConfig sim;
    sim.particles = *config.particles;
    sim.horizon = *config.horizon;
    sim.master_seed = *config.seed;

    std::string traj_csv =
        "# schema: mfc.trajectory.v1\nreplication,generation,particle_index,state\n";
    std::string agg_csv =
        "# schema: mfc.simulate-aggregate.v1\nreplication,generation,statistic,value\n";

    for (int r = 0; r < *config.replications; ++r) {
        sim.replication_index = static_cast<std::uint64_t>(r);
        if (const auto* gauss = std::get_if<GaussianMeanFieldModel>(&file.model)) {
            const GaussianTrajectory traj = gaussian_simulate_trajectory(*gauss, sim);
            for (const GaussianCloud& cloud : traj.clouds) {
                for (std::size_t i = 0; i < cloud.states.size(); ++i)
                    traj_csv += std::to_string(r) + ',' + std::to_string(cloud.generation) + ',' +
                                std::to_string(i) + ',' + format_double(cloud.states[i]) + '\n';
                if (config.aggregate) {
                    double mean = 0.0;
                    double m2 = 0.0;
                    for (double s : cloud.states) mean += s;
                    mean /= static_cast<double>(cloud.states.size());
                    for (double s : cloud.states) m2 += (s - mean) * (s - mean);
                    m2 /= static_cast<double>(cloud.states.size());
                    agg_csv += std::to_string(r) + ',' + std::to_string(cloud.generation) +
                               ",mean," + format_double(mean) + '\n';
                    agg_csv += std::to_string(r) + ',' + std::to_string(cloud.generation) +
                               ",variance," + format_double(m2) + '\n';
                }
            }
            continue;
        }
        Trajectory traj;
        std::function<std::size_t(int)> states_at;
        if (const auto* fk = std::get_if<FeynmanKacModel>(&file.model)) {
            traj = simulate_trajectory(*fk, sim);
            states_at = [fk](int generation) { return fk->states_at(generation); };
        } else {
            const auto& gas = std::get<McKeanGasModel>(file.model);
            traj = simulate_trajectory(gas, sim);
            states_at = [&gas](int) { return gas.num_states(); };
        }
        for (const ParticleCloud& cloud : traj.clouds) {
            for (std::size_t i = 0; i < cloud.states.size(); ++i)
                traj_csv += std::to_string(r) + ',' + std::to_string(cloud.generation) + ',' +
                            std::to_string(i) + ',' + std::to_string(cloud.states[i]) + '\n';
            if (config.aggregate) {
                const ProbabilityVector emp =
                    empirical_measure(cloud, states_at(cloud.generation));
                for (std::size_t k = 0; k < emp.size(); ++k)
                    agg_csv += std::to_string(r) + ',' + std::to_string(cloud.generation) +
                               ",freq_" + std::to_string(k) + ',' + format_double(emp[k]) + '\n';
            }
        }
    }
    write_file(config.output_dir + "/trajectory.csv", traj_csv);
    if (config.aggregate) write_file(config.output_dir + "/aggregate.csv", agg_csv);
    return 0;
}

int run_verify(const RunConfig& config, const ModelFile& file) {
    std::optional<FiniteModel> finite;
    if (const auto* fk = std::get_if<FeynmanKacModel>(&file.model))
        finite = *fk;
    else if (const auto* gas = std::get_if<McKeanGasModel>(&file.model))
        finite = *gas;
    else
        throw std::runtime_error("verify: gaussian models have no finite-state oracle");
    ExperimentSpec spec{std::move(*finite)};
    spec.particles = *config.particles;
    spec.replications = *config.replications;
    spec.horizon = *config.horizon;
    spec.x_grid = config.x_grid;
    spec.master_seed = *config.seed;
    spec.threads = *config.threads;

    const ExperimentReport report = run_all_checks(spec);
    write_file(config.output_dir + "/report.csv", report.to_csv());
    write_file(config.output_dir + "/report.json", report.to_json());
    return report.all_pass ? 0 : 2;
}

}  // namespace

RunConfig parse_run_config_json(const std::string& text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1;
        const std::size_t upto = std::min(text.size(), e.byte > 0 ? e.byte - 1 : 0);
        for (std::size_t i = 0; i < upto; ++i)
            if (text[i] == '\n') ++line;
        throw std::runtime_error(origin + ":" + std::to_string(line) + ": " + e.what());
    }
    if (!doc.is_object()) throw std::runtime_error(origin + ": config must be a JSON object");
    for (const auto& item : doc.items()) {
        const std::string& key = item.key();
        if (key != "schema_version" && key != "subcommand" && key != "model_file" &&
            key != "output_dir" && key != "overrides")
            throw std::runtime_error(origin + ": unknown key \"" + key + "\"");
    }
    if (doc.contains("schema_version") && doc["schema_version"].get<std::string>() != kConfigSchema)
        throw std::runtime_error(origin + ": unsupported schema_version");
    RunConfig config;
    if (doc.contains("subcommand"))
        config.subcommand = parse_subcommand(doc["subcommand"].get<std::string>(), origin);
    if (doc.contains("model_file")) config.model_file = doc["model_file"].get<std::string>();
    if (doc.contains("output_dir")) config.output_dir = doc["output_dir"].get<std::string>();
    if (doc.contains("overrides")) {
        const json& ov = doc["overrides"];
        for (const auto& item : ov.items()) {
            const std::string& key = item.key();
            if (key == "N")
                config.particles = item.value().get<int>();
            else if (key == "R")
                config.replications = item.value().get<int>();
            else if (key == "horizon")
                config.horizon = item.value().get<int>();
            else if (key == "threads")
                config.threads = item.value().get<int>();
            else if (key == "seed")
                config.seed = item.value().get<std::uint64_t>();
            else if (key == "x_grid")
                config.x_grid = item.value().get<std::vector<double>>();
            else if (key == "xs")
                config.xs = item.value().get<std::vector<double>>();
            else if (key == "N_grid")
                config.n_grid = item.value().get<std::vector<std::int64_t>>();
            else if (key == "aggregate")
                config.aggregate = item.value().get<bool>();
            else
                throw std::runtime_error(origin + ": unknown override \"" + key + "\"");
        }
    }
    return config;
}

RunConfig load_run_config(const std::string& path) {
    return parse_run_config_json(read_file(path), path);
}

void apply_env_overrides(RunConfig& config) {
    if (const char* env = std::getenv("MFC_SEED")) {
        try {
            config.seed = std::stoull(env);
        } catch (const std::exception&) {
            throw std::runtime_error("MFC_SEED: not a valid unsigned integer");
        }
    }
}

int run(const RunConfig& config) {
    try {
        std::filesystem::create_directories(config.output_dir);
        const bool needs_model = config.subcommand == Subcommand::Simulate ||
                                 config.subcommand == Subcommand::Verify;
        std::optional<ModelFile> model;
        if (needs_model) {
            if (config.model_file.empty())
                throw std::runtime_error(std::string(subcommand_name(config.subcommand)) +
                                         ": a model file is required");
            model = load_model_file(config.model_file);
        }
        const RunConfig resolved = resolve_defaults(config, model ? &*model : nullptr);
        write_manifest(resolved);
        switch (resolved.subcommand) {
            case Subcommand::Legendre: return run_legendre(resolved);
            case Subcommand::Certify: return run_certify(resolved);
            case Subcommand::Simulate: return run_simulate(resolved, *model);
            case Subcommand::Verify: return run_verify(resolved, *model);
        }
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace mfc
