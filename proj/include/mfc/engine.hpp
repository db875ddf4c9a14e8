#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "mfc/measure.hpp"
#include "mfc/models.hpp"
#include "mfc/rng.hpp"

namespace mfc {

/// Everything a run needs to be replayed: the trajectory is a deterministic
/// function of (master_seed, replication_index).
struct SimulationConfig {
    int particles = 1;  // N
    int horizon = 0;
    std::uint64_t master_seed = 0;
    std::uint64_t replication_index = 0;
};

/// Clouds for generations 0 .. horizon.
struct Trajectory {
    std::vector<ParticleCloud> clouds;
};

struct GaussianCloud {
    std::vector<double> states;
    int generation = 0;
};

struct GaussianTrajectory {
    std::vector<GaussianCloud> clouds;
};

/// Inverse-CDF sampler over the rows of a kernel; the row CDFs are built
/// once so a generation step costs O(N log S).
class KernelSampler {
  public:
    explicit KernelSampler(const FiniteKernel& k);
    std::int32_t sample(std::int32_t from, double u) const;
    std::size_t source_states() const { return rows_; }

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> cdf_;  // row-major cumulative rows
};

std::int32_t sample_index(const ProbabilityVector& p, double u);

namespace detail {

template <typename Model>
ParticleCloud init_cloud_impl(const Model& model, const SimulationConfig& config, Rng& rng) {
    if (config.particles < 1) throw std::invalid_argument("init_cloud: need at least one particle");
    const ProbabilityVector& eta0 = model.initial_law();
    ParticleCloud cloud;
    cloud.generation = 0;
    cloud.states.resize(static_cast<std::size_t>(config.particles));
    for (auto& s : cloud.states) s = sample_index(eta0, rng.next_double());
    return cloud;
}

template <typename Model>
ParticleCloud step_impl(const Model& model, const ParticleCloud& cloud, Rng& rng) {
    const ProbabilityVector eta = empirical_measure(cloud, model.states_at(cloud.generation));
    const KernelSampler sampler(model.mckean_kernel(eta, cloud.generation));
    ParticleCloud next;
    next.generation = cloud.generation + 1;
    next.states.resize(cloud.states.size());
    for (std::size_t i = 0; i < cloud.states.size(); ++i)
        next.states[i] = sampler.sample(cloud.states[i], rng.next_double());
    return next;
}

template <typename Model>
double local_error_impl(const Model& model, const Trajectory& traj, int n,
                        const BoundedFunction& f) {
    if (n < 0 || static_cast<std::size_t>(n) >= traj.clouds.size())
        throw std::out_of_range("local_error_field: generation out of range");
    const ParticleCloud& cur = traj.clouds[static_cast<std::size_t>(n)];
    const double n_particles = static_cast<double>(cur.size());
    double predicted = 0.0;
    if (n == 0) {
        predicted = integrate(model.initial_law(), f);
    } else {
        const ParticleCloud& prev = traj.clouds[static_cast<std::size_t>(n - 1)];
        const ProbabilityVector eta = empirical_measure(prev, model.states_at(n - 1));
        const BoundedFunction kf = kernel_apply(model.mckean_kernel(eta, n - 1), f);
        predicted = integrate(prev, kf);
    }
    return std::sqrt(n_particles) * (integrate(cur, f) - predicted);
}

}  // namespace detail

// Finite-state engine; works for any model exposing initial_law(),
// states_at()/num_states() and mckean_kernel().

ParticleCloud init_cloud(const FeynmanKacModel& model, const SimulationConfig& config);
ParticleCloud init_cloud(const McKeanGasModel& model, const SimulationConfig& config);

ParticleCloud mean_field_step(const FeynmanKacModel& model, const ParticleCloud& cloud, Rng& rng);
ParticleCloud mean_field_step(const McKeanGasModel& model, const ParticleCloud& cloud, Rng& rng);

Trajectory simulate_trajectory(const FeynmanKacModel& model, const SimulationConfig& config);
Trajectory simulate_trajectory(const McKeanGasModel& model, const SimulationConfig& config);

/// Local sampling error sqrt(N) (eta_n^N(f) - eta_{n-1}^N K_{n,eta^N}(f));
/// at n = 0 the predictor is the initial law.
double local_error_field(const FeynmanKacModel& model, const Trajectory& traj, int n,
                         const BoundedFunction& f);
double local_error_field(const McKeanGasModel& model, const Trajectory& traj, int n,
                         const BoundedFunction& f);

/// Fluctuation sqrt(N) (eta_n^N(f) - eta_n(f)) against a precomputed flow.
double fluctuation_field(const Trajectory& traj, int n, const BoundedFunction& f,
                         std::span<const ProbabilityVector> flow);
double fluctuation_field(const FeynmanKacModel& model, const Trajectory& traj, int n,
                         const BoundedFunction& f);
double fluctuation_field(const McKeanGasModel& model, const Trajectory& traj, int n,
                         const BoundedFunction& f);

// Gaussian engine.

/// Test observables whose Gaussian conditional expectations are closed-form:
/// quadratic polynomials and interval indicators. Local error fields for the
/// Gaussian model are restricted to this class.
struct GaussianObservable {
    enum class Kind { Polynomial, Indicator };
    Kind kind = Kind::Polynomial;
    double q0 = 0.0, q1 = 0.0, q2 = 0.0;  // q0 + q1 x + q2 x^2
    double lo = 0.0, hi = 0.0;            // indicator of [lo, hi]

    static GaussianObservable polynomial(double q0, double q1, double q2 = 0.0);
    static GaussianObservable indicator(double lo, double hi);

    double eval(double x) const;
    /// E f(Z) for Z ~ normal(mean, variance).
    double normal_expectation(double mean, double variance) const;
};

GaussianCloud gaussian_init_cloud(const GaussianMeanFieldModel& model,
                                  const SimulationConfig& config);
GaussianCloud gaussian_mean_field_step(const GaussianMeanFieldModel& model,
                                       const GaussianCloud& cloud, Rng& rng);
GaussianTrajectory gaussian_simulate_trajectory(const GaussianMeanFieldModel& model,
                                                const SimulationConfig& config);

double gaussian_local_error_field(const GaussianMeanFieldModel& model,
                                  const GaussianTrajectory& traj, int n,
                                  const GaussianObservable& f);

/// Fluctuation against the decoupled-model moment oracle; throws when the
/// model has no closed-form flow.
double gaussian_fluctuation_field(const GaussianMeanFieldModel& model,
                                  const GaussianTrajectory& traj, int n,
                                  const GaussianObservable& f);

}  // namespace mfc
