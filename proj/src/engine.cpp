#include "mfc/engine.hpp"

#include <algorithm>
#include <cmath>

namespace mfc {

KernelSampler::KernelSampler(const FiniteKernel& k)
    : rows_(k.source_states()), cols_(k.target_states()), cdf_(rows_ * cols_) {
    for (std::size_t x = 0; x < rows_; ++x) {
        double acc = 0.0;
        for (std::size_t y = 0; y < cols_; ++y) {
            acc += k(x, y);
            cdf_[x * cols_ + y] = acc;
        }
        cdf_[x * cols_ + cols_ - 1] = 1.0;  // guard against rounding shortfall
    }
}

std::int32_t KernelSampler::sample(std::int32_t from, double u) const {
    const double* row = cdf_.data() + static_cast<std::size_t>(from) * cols_;
    const double* it = std::upper_bound(row, row + cols_, u);
    if (it == row + cols_) --it;
    return static_cast<std::int32_t>(it - row);
}

std::int32_t sample_index(const ProbabilityVector& p, double u) {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
        acc += p[i];
        if (u < acc) return static_cast<std::int32_t>(i);
    }
    return static_cast<std::int32_t>(p.size() - 1);
}

namespace {

/// FeynmanKacModel already exposes states_at(); the gas model is time
/// homogeneous, so give it the same shape through a thin adapter.
struct GasAdapter {
    const McKeanGasModel& model;
    const ProbabilityVector& initial_law() const { return model.initial_law(); }
    std::size_t states_at(int) const { return model.num_states(); }
    FiniteKernel mckean_kernel(const ProbabilityVector& eta, int n) const {
        return model.mckean_kernel(eta, n);
    }
};

template <typename Model>
Trajectory simulate_impl(const Model& model, const SimulationConfig& config) {
    if (config.horizon < 0) throw std::invalid_argument("simulate_trajectory: negative horizon");
    Rng rng = Rng::stream(config.master_seed, config.replication_index);
    Trajectory traj;
    traj.clouds.reserve(static_cast<std::size_t>(config.horizon) + 1);
    traj.clouds.push_back(detail::init_cloud_impl(model, config, rng));
    for (int n = 0; n < config.horizon; ++n)
        traj.clouds.push_back(detail::step_impl(model, traj.clouds.back(), rng));
    return traj;
}

}  // namespace

ParticleCloud init_cloud(const FeynmanKacModel& model, const SimulationConfig& config) {
    Rng rng = Rng::stream(config.master_seed, config.replication_index);
    return detail::init_cloud_impl(model, config, rng);
}

ParticleCloud init_cloud(const McKeanGasModel& model, const SimulationConfig& config) {
    Rng rng = Rng::stream(config.master_seed, config.replication_index);
    return detail::init_cloud_impl(GasAdapter{model}, config, rng);
}

ParticleCloud mean_field_step(const FeynmanKacModel& model, const ParticleCloud& cloud, Rng& rng) {
    return detail::step_impl(model, cloud, rng);
}

ParticleCloud mean_field_step(const McKeanGasModel& model, const ParticleCloud& cloud, Rng& rng) {
    return detail::step_impl(GasAdapter{model}, cloud, rng);
}

Trajectory simulate_trajectory(const FeynmanKacModel& model, const SimulationConfig& config) {
    if (config.horizon > model.max_generation())
        throw std::out_of_range("simulate_trajectory: horizon exceeds model generations");
    return simulate_impl(model, config);
}

Trajectory simulate_trajectory(const McKeanGasModel& model, const SimulationConfig& config) {
    return simulate_impl(GasAdapter{model}, config);
}

double local_error_field(const FeynmanKacModel& model, const Trajectory& traj, int n,
                         const BoundedFunction& f) {
    return detail::local_error_impl(model, traj, n, f);
}

double local_error_field(const McKeanGasModel& model, const Trajectory& traj, int n,
                         const BoundedFunction& f) {
    return detail::local_error_impl(GasAdapter{model}, traj, n, f);
}

double fluctuation_field(const Trajectory& traj, int n, const BoundedFunction& f,
                         std::span<const ProbabilityVector> flow) {
    if (n < 0 || static_cast<std::size_t>(n) >= traj.clouds.size() ||
        static_cast<std::size_t>(n) >= flow.size())
        throw std::out_of_range("fluctuation_field: generation out of range");
    const ParticleCloud& cloud = traj.clouds[static_cast<std::size_t>(n)];
    return std::sqrt(static_cast<double>(cloud.size())) *
           (integrate(cloud, f) - integrate(flow[static_cast<std::size_t>(n)], f));
}

double fluctuation_field(const FeynmanKacModel& model, const Trajectory& traj, int n,
                         const BoundedFunction& f) {
    const auto flow = exact_flow(model, n);
    return fluctuation_field(traj, n, f, flow);
}

double fluctuation_field(const McKeanGasModel& model, const Trajectory& traj, int n,
                         const BoundedFunction& f) {
    const auto flow = exact_flow(model, n);
    return fluctuation_field(traj, n, f, flow);
}

GaussianObservable GaussianObservable::polynomial(double q0, double q1, double q2) {
    GaussianObservable f;
    f.kind = Kind::Polynomial;
    f.q0 = q0;
    f.q1 = q1;
    f.q2 = q2;
    return f;
}

GaussianObservable GaussianObservable::indicator(double lo, double hi) {
    if (!(lo <= hi)) throw std::invalid_argument("GaussianObservable::indicator: empty interval");
    GaussianObservable f;
    f.kind = Kind::Indicator;
    f.lo = lo;
    f.hi = hi;
    return f;
}

double GaussianObservable::eval(double x) const {
    if (kind == Kind::Polynomial) return q0 + q1 * x + q2 * x * x;
    return (x >= lo && x <= hi) ? 1.0 : 0.0;
}

namespace {
double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
}  // namespace

double GaussianObservable::normal_expectation(double mean, double variance) const {
    if (kind == Kind::Polynomial) return q0 + q1 * mean + q2 * (mean * mean + variance);
    const double sd = std::sqrt(variance);
    if (sd == 0.0) return eval(mean);
    return normal_cdf((hi - mean) / sd) - normal_cdf((lo - mean) / sd);
}

namespace {

GaussianCloud gaussian_init_impl(const GaussianMeanFieldModel& model,
                                 const SimulationConfig& config, Rng& rng) {
    if (config.particles < 1)
        throw std::invalid_argument("gaussian_init_cloud: need at least one particle");
    GaussianCloud cloud;
    cloud.generation = 0;
    cloud.states.resize(static_cast<std::size_t>(config.particles));
    const double sd = std::sqrt(model.initial_variance);
    for (auto& s : cloud.states) s = model.initial_mean + sd * rng.next_gaussian();
    return cloud;
}

}  // namespace

GaussianCloud gaussian_init_cloud(const GaussianMeanFieldModel& model,
                                  const SimulationConfig& config) {
    Rng rng = Rng::stream(config.master_seed, config.replication_index);
    return gaussian_init_impl(model, config, rng);
}

GaussianCloud gaussian_mean_field_step(const GaussianMeanFieldModel& model,
                                       const GaussianCloud& cloud, Rng& rng) {
    double eta_b = 0.0;
    for (double s : cloud.states) eta_b += model.drift_b(s);
    eta_b /= static_cast<double>(cloud.states.size());
    GaussianCloud next;
    next.generation = cloud.generation + 1;
    next.states.resize(cloud.states.size());
    const double sd = std::sqrt(model.noise_variance);
    for (std::size_t i = 0; i < cloud.states.size(); ++i)
        next.states[i] = model.drift(cloud.states[i], eta_b) + sd * rng.next_gaussian();
    return next;
}

GaussianTrajectory gaussian_simulate_trajectory(const GaussianMeanFieldModel& model,
                                                const SimulationConfig& config) {
    if (config.horizon < 0)
        throw std::invalid_argument("gaussian_simulate_trajectory: negative horizon");
    GaussianTrajectory traj;
    traj.clouds.reserve(static_cast<std::size_t>(config.horizon) + 1);
    Rng rng = Rng::stream(config.master_seed, config.replication_index);
    traj.clouds.push_back(gaussian_init_impl(model, config, rng));
    for (int n = 0; n < config.horizon; ++n)
        traj.clouds.push_back(gaussian_mean_field_step(model, traj.clouds.back(), rng));
    return traj;
}

double gaussian_local_error_field(const GaussianMeanFieldModel& model,
                                  const GaussianTrajectory& traj, int n,
                                  const GaussianObservable& f) {
    if (n < 0 || static_cast<std::size_t>(n) >= traj.clouds.size())
        throw std::out_of_range("gaussian_local_error_field: generation out of range");
    const GaussianCloud& cur = traj.clouds[static_cast<std::size_t>(n)];
    const double n_particles = static_cast<double>(cur.states.size());
    double current = 0.0;
    for (double s : cur.states) current += f.eval(s);
    current /= n_particles;
    double predicted = 0.0;
    if (n == 0) {
        predicted = f.normal_expectation(model.initial_mean, model.initial_variance);
    } else {
        const GaussianCloud& prev = traj.clouds[static_cast<std::size_t>(n - 1)];
        double eta_b = 0.0;
        for (double s : prev.states) eta_b += model.drift_b(s);
        eta_b /= static_cast<double>(prev.states.size());
        for (double s : prev.states)
            predicted += f.normal_expectation(model.drift(s, eta_b), model.noise_variance);
        predicted /= static_cast<double>(prev.states.size());
    }
    return std::sqrt(n_particles) * (current - predicted);
}

double gaussian_fluctuation_field(const GaussianMeanFieldModel& model,
                                  const GaussianTrajectory& traj, int n,
                                  const GaussianObservable& f) {
    if (n < 0 || static_cast<std::size_t>(n) >= traj.clouds.size())
        throw std::out_of_range("gaussian_fluctuation_field: generation out of range");
    const auto moments = exact_flow(model, n);
    const GaussianCloud& cloud = traj.clouds[static_cast<std::size_t>(n)];
    double current = 0.0;
    for (double s : cloud.states) current += f.eval(s);
    current /= static_cast<double>(cloud.states.size());
    const GaussianMoments& m = moments[static_cast<std::size_t>(n)];
    return std::sqrt(static_cast<double>(cloud.states.size())) *
           (current - f.normal_expectation(m.mean, m.variance));
}

}  // namespace mfc
