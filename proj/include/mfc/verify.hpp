#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mfc/bounds.hpp"
#include "mfc/engine.hpp"
#include "mfc/measure.hpp"
#include "mfc/models.hpp"

namespace mfc {

using FiniteModel = std::variant<FeynmanKacModel, McKeanGasModel>;

/// Statistical pass thresholds; fixed defaults, overridable per experiment.
struct ExperimentThresholds {
    double exceedance_sigma = 3.0;     // one-sided binomial slack
    double variance_ratio_tol = 0.10;  // CLT variance ratio tolerance
    double variance_ratio_tol_n0 = 0.05;
    double covariance_sigma = 4.0;
    double khintchine_rel_se = 4.0;
};

struct ExperimentSpec {
    explicit ExperimentSpec(FiniteModel model_in) : model(std::move(model_in)) {}

    FiniteModel model;
    int particles = 1000;
    int horizon = 1;
    int replications = 200;
    std::vector<BoundedFunction> test_functions;  // empty: indicators + a seeded +-1/2 function
    std::vector<double> x_grid = {0.5, 1.0, 2.0, 3.0};
    std::uint64_t master_seed = 0;
    int threads = 0;  // 0: machine parallelism; the results do not depend on it
    ExperimentThresholds thresholds;
    /// Per-generation certificate parameters for exceedance checks. Required
    /// for gas models; computed from the exact semigroup tables when absent
    /// on Feynman-Kac models.
    std::optional<std::vector<ConcentrationParams>> params_override;
};

struct CheckRow {
    std::string check;
    int generation = 0;
    std::string function_id;
    double x_or_m = 0.0;
    double empirical = 0.0;
    double bound = 0.0;
    double std_error = 0.0;
    bool pass = true;
};

struct ExperimentReport {
    std::vector<CheckRow> rows;
    bool all_pass = true;

    void add(CheckRow row);
    void merge(const ExperimentReport& other);
    std::string to_csv() const;
    std::string to_json() const;
};

/// Replicated-simulation store: fluctuation and local-error fields for every
/// (replication, generation, test function). Replications run concurrently
/// on private streams; every derived statistic reduces sequentially over the
/// replication index, so reports are bit-identical for any thread count.
class Battery {
  public:
    explicit Battery(const ExperimentSpec& spec);

    int horizon() const { return horizon_; }
    int replications() const { return replications_; }
    int particles() const { return particles_; }
    const std::vector<BoundedFunction>& functions() const { return functions_; }
    const std::vector<std::string>& function_ids() const { return function_ids_; }
    std::span<const ProbabilityVector> flow() const { return flow_; }

    double v(int r, int n, int f) const { return v_[index(r, n, f)]; }
    double w(int r, int n, int f) const { return w_[index(r, n, f)]; }

  private:
    std::size_t index(int r, int n, int f) const {
        return (static_cast<std::size_t>(r) * static_cast<std::size_t>(horizon_ + 1) +
                static_cast<std::size_t>(n)) *
                   functions_.size() +
               static_cast<std::size_t>(f);
    }

    int horizon_ = 0;
    int replications_ = 0;
    int particles_ = 0;
    std::vector<BoundedFunction> functions_;
    std::vector<std::string> function_ids_;
    std::vector<ProbabilityVector> flow_;
    std::vector<double> v_;
    std::vector<double> w_;
};

/// Exact one-generation field variance along a flow: the conditional
/// variance of f under the McKean transition at the previous exact measure
/// (plain variance under the initial law at generation 0).
double exact_w_variance(const FiniteModel& model, std::span<const ProbabilityVector> flow, int n,
                        const BoundedFunction& f);

/// Exact limiting variance of the fluctuation field: the sum over
/// generations of the field variances of the first-order semigroup images
/// of f. Finite Feynman-Kac models only.
double exact_clt_variance(const FeynmanKacModel& model, int n, const BoundedFunction& f);

/// Indicators of every state plus one seeded +-1/2 valued function.
std::vector<BoundedFunction> default_test_functions(std::size_t states, std::uint64_t seed);
std::vector<std::string> default_test_function_ids(std::size_t states);

/// Per-generation certificate parameters used by the exceedance check.
std::vector<ConcentrationParams> certificate_params(const ExperimentSpec& spec);

// The four checks. Each builds its own battery; run_all_checks shares one.
ExperimentReport exceedance_experiment(const ExperimentSpec& spec);
ExperimentReport clt_variance_check(const ExperimentSpec& spec);
ExperimentReport wfield_covariance_check(const ExperimentSpec& spec);
ExperimentReport khintchine_check(const ExperimentSpec& spec);
ExperimentReport run_all_checks(const ExperimentSpec& spec);

// Battery-level entry points for callers that reuse one simulation set.
ExperimentReport exceedance_experiment(const ExperimentSpec& spec, const Battery& battery);
ExperimentReport clt_variance_check(const ExperimentSpec& spec, const Battery& battery);
ExperimentReport wfield_covariance_check(const ExperimentSpec& spec, const Battery& battery);
ExperimentReport khintchine_check(const ExperimentSpec& spec, const Battery& battery);

/// Khintchine moment ceiling for the 2m-th absolute moment: 2^{-m} (2m)!/m!.
double khintchine_moment_bound(int m);

/// Run `tasks` jobs on `threads` workers (0 picks the machine parallelism).
/// Job outputs must go to disjoint slots; exceptions are rethrown.
void parallel_for(int tasks, int threads, const std::function<void(int)>& body);

}  // namespace mfc
