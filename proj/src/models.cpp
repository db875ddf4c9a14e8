#include "mfc/models.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace mfc {

namespace {

void check_state_cap(std::size_t states, const char* what) {
    if (states > kMaxStates)
        throw std::invalid_argument(std::string(what) + ": state space exceeds the dense-oracle cap of " +
                                    std::to_string(kMaxStates));
}

}  // namespace

FeynmanKacModel::FeynmanKacModel(std::vector<BoundedFunction> potentials,
                                 std::vector<FiniteKernel> mutations, std::vector<double> epsilons,
                                 ProbabilityVector initial)
    : potentials_(std::move(potentials)),
      mutations_(std::move(mutations)),
      epsilons_(std::move(epsilons)),
      initial_(std::move(initial)) {
    if (potentials_.empty()) throw std::invalid_argument("FeynmanKacModel: no generations");
    if (mutations_.size() != potentials_.size() || epsilons_.size() != potentials_.size())
        throw std::invalid_argument("FeynmanKacModel: potentials, mutations, epsilons sizes differ");
    check_state_cap(initial_.size(), "FeynmanKacModel");
    std::size_t states = initial_.size();
    for (std::size_t n = 0; n < potentials_.size(); ++n) {
        if (potentials_[n].size() != states)
            throw std::invalid_argument("FeynmanKacModel: potential dimension mismatch at generation " +
                                        std::to_string(n));
        if (mutations_[n].source_states() != states)
            throw std::invalid_argument("FeynmanKacModel: mutation dimension mismatch at generation " +
                                        std::to_string(n));
        check_state_cap(mutations_[n].target_states(), "FeynmanKacModel");
        if (!(potentials_[n].min() > 0.0))
            throw std::invalid_argument("FeynmanKacModel: potential must be strictly positive");
        const double eps = epsilons_[n];
        if (!(eps >= 0.0 && eps <= 1.0))
            throw std::invalid_argument("FeynmanKacModel: epsilon outside [0, 1]");
        if (eps * potentials_[n].max() > 1.0 + kProbTol)
            throw std::invalid_argument("FeynmanKacModel: epsilon * max potential exceeds 1");
        states = mutations_[n].target_states();
    }
}

FeynmanKacModel FeynmanKacModel::homogeneous(const BoundedFunction& potential,
                                             const FiniteKernel& mutation, double epsilon,
                                             const ProbabilityVector& initial, int horizon) {
    if (horizon < 1) throw std::invalid_argument("FeynmanKacModel::homogeneous: horizon must be >= 1");
    return FeynmanKacModel(std::vector<BoundedFunction>(static_cast<std::size_t>(horizon), potential),
                           std::vector<FiniteKernel>(static_cast<std::size_t>(horizon), mutation),
                           std::vector<double>(static_cast<std::size_t>(horizon), epsilon), initial);
}

std::size_t FeynmanKacModel::states_at(int generation) const {
    if (generation < 0 || generation > max_generation())
        throw std::out_of_range("FeynmanKacModel::states_at: generation out of range");
    if (generation == 0) return initial_.size();
    return mutations_[static_cast<std::size_t>(generation - 1)].target_states();
}

const BoundedFunction& FeynmanKacModel::potential(int n) const {
    if (n < 0 || n >= max_generation())
        throw std::out_of_range("FeynmanKacModel::potential: generation out of range");
    return potentials_[static_cast<std::size_t>(n)];
}

const FiniteKernel& FeynmanKacModel::mutation(int n) const {
    if (n < 0 || n >= max_generation())
        throw std::out_of_range("FeynmanKacModel::mutation: generation out of range");
    return mutations_[static_cast<std::size_t>(n)];
}

double FeynmanKacModel::epsilon(int n) const {
    if (n < 0 || n >= max_generation())
        throw std::out_of_range("FeynmanKacModel::epsilon: generation out of range");
    return epsilons_[static_cast<std::size_t>(n)];
}

ProbabilityVector FeynmanKacModel::phi_step(const ProbabilityVector& eta, int n) const {
    return pushforward(boltzmann_gibbs(eta, potential(n)), mutation(n));
}

FiniteKernel FeynmanKacModel::mckean_kernel(const ProbabilityVector& eta, int n) const {
    const BoundedFunction& g = potential(n);
    const FiniteKernel& m = mutation(n);
    const double eps = epsilon(n);
    if (eta.size() != g.size())
        throw std::invalid_argument("mckean_kernel: measure dimension mismatch");
    const ProbabilityVector next = phi_step(eta, n);
    std::vector<std::vector<double>> rows(eta.size(),
                                          std::vector<double>(m.target_states(), 0.0));
    for (std::size_t x = 0; x < eta.size(); ++x) {
        const double keep = eps * g[x];
        if (keep > 1.0 + kProbTol)
            throw std::invalid_argument("mckean_kernel: epsilon * potential exceeds 1 at a state");
        for (std::size_t y = 0; y < m.target_states(); ++y)
            rows[x][y] = keep * m(x, y) + (1.0 - keep) * next[y];
    }
    return FiniteKernel(std::move(rows));
}

McKeanGasModel::McKeanGasModel(std::vector<double> nu,
                               std::vector<std::vector<double>> collision_weights,
                               std::vector<FiniteKernel> post_collision, ProbabilityVector initial)
    : nu_(std::move(nu)),
      a_(std::move(collision_weights)),
      m_(std::move(post_collision)),
      initial_(std::move(initial)) {
    const std::size_t labels = nu_.size();
    const std::size_t states = initial_.size();
    check_state_cap(states, "McKeanGasModel");
    if (labels == 0) throw std::invalid_argument("McKeanGasModel: no labels");
    if (a_.size() != labels || m_.size() != labels)
        throw std::invalid_argument("McKeanGasModel: label dimension mismatch");
    for (double w : nu_)
        if (!(w >= 0.0)) throw std::invalid_argument("McKeanGasModel: nu weights must be >= 0");
    for (std::size_t s = 0; s < labels; ++s) {
        if (a_[s].size() != states)
            throw std::invalid_argument("McKeanGasModel: collision weight dimension mismatch");
        for (double v : a_[s])
            if (!(v >= 0.0))
                throw std::invalid_argument("McKeanGasModel: collision weights must be >= 0");
        if (m_[s].source_states() != states || m_[s].target_states() != states)
            throw std::invalid_argument("McKeanGasModel: post-collision kernel dimension mismatch");
    }
    for (std::size_t x = 0; x < states; ++x) {
        double mass = 0.0;
        for (std::size_t s = 0; s < labels; ++s) mass += nu_[s] * a_[s][x];
        if (std::abs(mass - 1.0) > kProbTol)
            throw std::invalid_argument(
                "McKeanGasModel: normalization violation, sum_s nu(s) a(s, x) = " +
                std::to_string(mass) + " at state " + std::to_string(x));
    }
}

McKeanGasModel McKeanGasModel::two_velocities(double p_plus) {
    if (!(p_plus >= 0.0 && p_plus <= 1.0))
        throw std::invalid_argument("two_velocities: p_plus outside [0, 1]");
    // State 0 is velocity +1, state 1 is velocity -1; a collision with label s
    // multiplies velocities, so the successor index is s XOR x.
    std::vector<std::vector<double>> a = {{1.0, 0.0}, {0.0, 1.0}};
    std::vector<FiniteKernel> m;
    m.push_back(FiniteKernel({{1.0, 0.0}, {0.0, 1.0}}));  // label +1 keeps the state
    m.push_back(FiniteKernel({{0.0, 1.0}, {1.0, 0.0}}));  // label -1 flips it
    return McKeanGasModel({1.0, 1.0}, std::move(a), std::move(m),
                          ProbabilityVector({p_plus, 1.0 - p_plus}));
}

ProbabilityVector McKeanGasModel::phi_step(const ProbabilityVector& eta, int n) const {
    return pushforward(eta, mckean_kernel(eta, n));
}

FiniteKernel McKeanGasModel::mckean_kernel(const ProbabilityVector& eta, int) const {
    if (eta.size() != num_states())
        throw std::invalid_argument("gas kernel: measure dimension mismatch");
    const std::size_t states = num_states();
    std::vector<double> label_mass(num_labels(), 0.0);
    for (std::size_t s = 0; s < num_labels(); ++s) {
        double acc = 0.0;
        for (std::size_t u = 0; u < states; ++u) acc += eta[u] * a_[s][u];
        label_mass[s] = nu_[s] * acc;
    }
    std::vector<std::vector<double>> rows(states, std::vector<double>(states, 0.0));
    for (std::size_t s = 0; s < num_labels(); ++s) {
        if (label_mass[s] == 0.0) continue;
        for (std::size_t x = 0; x < states; ++x)
            for (std::size_t y = 0; y < states; ++y) rows[x][y] += label_mass[s] * m_[s](x, y);
    }
    return FiniteKernel(std::move(rows));
}

double ScalarFunc::operator()(double x) const {
    double v = c0 + c1 * x;
    if (amp != 0.0) v += amp * std::tanh(x / scale);
    return v;
}

double ScalarFunc::sup_norm() const {
    if (!is_bounded()) throw std::invalid_argument("ScalarFunc::sup_norm: unbounded function");
    return std::abs(c0) + std::abs(amp);
}

double ScalarFunc::oscillation() const {
    if (!is_bounded()) throw std::invalid_argument("ScalarFunc::oscillation: unbounded function");
    return 2.0 * std::abs(amp);
}

GaussianMeanFieldModel::GaussianMeanFieldModel(ScalarFunc a, ScalarFunc b, ScalarFunc c, double q,
                                               double init_mean, double init_var)
    : drift_a(a), drift_b(b), drift_c(c), noise_variance(q), initial_mean(init_mean),
      initial_variance(init_var) {
    if (!(q > 0.0)) throw std::invalid_argument("GaussianMeanFieldModel: noise variance must be > 0");
    if (!(init_var >= 0.0))
        throw std::invalid_argument("GaussianMeanFieldModel: initial variance must be >= 0");
    if (!drift_b.is_bounded() || !drift_c.is_bounded())
        throw std::invalid_argument("GaussianMeanFieldModel: b and c must be bounded");
}

ProbabilityVector fk_phi_step(const FeynmanKacModel& model, const ProbabilityVector& eta, int n) {
    return model.phi_step(eta, n);
}

FiniteKernel fk_mckean_kernel(const FeynmanKacModel& model, const ProbabilityVector& eta, int n) {
    return model.mckean_kernel(eta, n);
}

double partition_function(const FeynmanKacModel& model, int horizon) {
    if (horizon < 0 || horizon > model.max_generation())
        throw std::out_of_range("partition_function: horizon out of range");
    double z = 1.0;
    ProbabilityVector eta = model.initial_law();
    for (int p = 0; p < horizon; ++p) {
        z *= integrate(eta, model.potential(p));
        eta = model.phi_step(eta, p);
    }
    return z;
}

double partition_function(const FeynmanKacModel& model, std::span<const ParticleCloud> clouds,
                          int horizon) {
    if (horizon < 0 || horizon > model.max_generation())
        throw std::out_of_range("partition_function: horizon out of range");
    if (clouds.size() < static_cast<std::size_t>(horizon))
        throw std::invalid_argument("partition_function: trajectory shorter than horizon");
    double z = 1.0;
    for (int p = 0; p < horizon; ++p)
        z *= integrate(clouds[static_cast<std::size_t>(p)], model.potential(p));
    return z;
}

ProbabilityVector gas_phi_step(const McKeanGasModel& model, const ProbabilityVector& eta) {
    return model.phi_step(eta);
}

FiniteKernel gas_kernel(const McKeanGasModel& model, const ProbabilityVector& eta) {
    return model.mckean_kernel(eta);
}

double gaussian_kernel_sample(const GaussianMeanFieldModel& model, double x, double eta_b_mean,
                              Rng& rng) {
    return model.drift(x, eta_b_mean) + std::sqrt(model.noise_variance) * rng.next_gaussian();
}

namespace {

template <typename Model>
std::vector<ProbabilityVector> iterate_flow(const Model& model, int horizon) {
    if (horizon < 0 || horizon > model.max_generation())
        throw std::out_of_range("exact_flow: horizon out of range");
    std::vector<ProbabilityVector> flow;
    flow.reserve(static_cast<std::size_t>(horizon) + 1);
    flow.push_back(model.initial_law());
    for (int n = 0; n < horizon; ++n) flow.push_back(model.phi_step(flow.back(), n));
    return flow;
}

}  // namespace

std::vector<ProbabilityVector> exact_flow(const FeynmanKacModel& model, int horizon) {
    return iterate_flow(model, horizon);
}

std::vector<ProbabilityVector> exact_flow(const McKeanGasModel& model, int horizon) {
    return iterate_flow(model, horizon);
}

std::vector<GaussianMoments> exact_flow(const GaussianMeanFieldModel& model, int horizon) {
    if (horizon < 0) throw std::out_of_range("exact_flow: negative horizon");
    if (!model.drift_c.is_zero() || !model.drift_a.is_affine())
        throw std::invalid_argument(
            "exact_flow: no closed-form oracle for interacting or non-affine Gaussian models");
    std::vector<GaussianMoments> flow;
    flow.reserve(static_cast<std::size_t>(horizon) + 1);
    flow.push_back({model.initial_mean, model.initial_variance});
    for (int n = 0; n < horizon; ++n) {
        const GaussianMoments& cur = flow.back();
        flow.push_back({model.drift_a.c0 + model.drift_a.c1 * cur.mean,
                        model.drift_a.c1 * model.drift_a.c1 * cur.variance + model.noise_variance});
    }
    return flow;
}

}  // namespace mfc
