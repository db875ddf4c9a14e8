#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mfc/measure.hpp"
#include "mfc/rng.hpp"

namespace mfc {

/// Dense-oracle state cap; every flow oracle is dense-matrix based.
inline constexpr std::size_t kMaxStates = 64;

/// Feynman-Kac flow: eta_{n+1} = BoltzmannGibbs(eta_n, G_n) pushed through
/// M_{n+1}. potentials[n] = G_n, mutations[n] = kernel taking generation n
/// into n+1, epsilons[n] = selection acceptance scale at generation n.
/// Validated on construction: strictly positive potentials, eps in [0, 1]
/// with eps * max(G) <= 1, matching dimensions, at most kMaxStates states.
class FeynmanKacModel {
  public:
    FeynmanKacModel(std::vector<BoundedFunction> potentials, std::vector<FiniteKernel> mutations,
                    std::vector<double> epsilons, ProbabilityVector initial);

    /// Time-homogeneous model usable for `horizon` generations.
    static FeynmanKacModel homogeneous(const BoundedFunction& potential,
                                       const FiniteKernel& mutation, double epsilon,
                                       const ProbabilityVector& initial, int horizon);

    int max_generation() const { return static_cast<int>(potentials_.size()); }
    std::size_t states_at(int generation) const;
    const ProbabilityVector& initial_law() const { return initial_; }
    const BoundedFunction& potential(int n) const;
    const FiniteKernel& mutation(int n) const;  // kernel from generation n into n+1
    double epsilon(int n) const;

    /// One exact flow step eta_{n+1} = Phi_{n+1}(eta_n).
    ProbabilityVector phi_step(const ProbabilityVector& eta, int n) const;

    /// McKean transition K_{n+1,eta}(x, .) = eps_n G_n(x) M_{n+1}(x, .)
    ///                                     + (1 - eps_n G_n(x)) Phi_{n+1}(eta).
    FiniteKernel mckean_kernel(const ProbabilityVector& eta, int n) const;

  private:
    std::vector<BoundedFunction> potentials_;
    std::vector<FiniteKernel> mutations_;
    std::vector<double> epsilons_;
    ProbabilityVector initial_;
};

/// Collision-type mean field model: labels s carry weights nu(s) and
/// collision profiles a(s, x) with sum_s nu(s) a(s, x) = 1 for every x;
/// post_collision[s] maps a pre-collision state to its successor law.
class McKeanGasModel {
  public:
    McKeanGasModel(std::vector<double> nu, std::vector<std::vector<double>> collision_weights,
                   std::vector<FiniteKernel> post_collision, ProbabilityVector initial);

    /// Two-velocities gas on {+1, -1} (state 0 is +1): a particle keeps its
    /// velocity with probability eta(+1) and flips otherwise, so the flow is
    /// p -> p^2 + (1-p)^2 for p = eta(+1).
    static McKeanGasModel two_velocities(double p_plus);

    std::size_t num_states() const { return initial_.size(); }
    std::size_t num_labels() const { return nu_.size(); }
    const ProbabilityVector& initial_law() const { return initial_; }
    const std::vector<double>& nu() const { return nu_; }
    const std::vector<std::vector<double>>& collision_weights() const { return a_; }
    const std::vector<FiniteKernel>& post_collision() const { return m_; }

    int max_generation() const { return 1 << 30; }  // time homogeneous
    ProbabilityVector phi_step(const ProbabilityVector& eta, int n = 0) const;

    /// K_{eta}(x, .) = sum_s nu(s) eta(a(s, .)) post_collision[s](x, .).
    FiniteKernel mckean_kernel(const ProbabilityVector& eta, int n = 0) const;

  private:
    std::vector<double> nu_;
    std::vector<std::vector<double>> a_;
    std::vector<FiniteKernel> m_;
    ProbabilityVector initial_;
};

/// Scalar drift component: c0 + c1 x + amp tanh(x / scale). The tanh term
/// is the bounded nonlinearity; interaction coefficients must have c1 = 0.
struct ScalarFunc {
    double c0 = 0.0;
    double c1 = 0.0;
    double amp = 0.0;
    double scale = 1.0;

    double operator()(double x) const;
    bool is_bounded() const { return c1 == 0.0; }
    bool is_affine() const { return amp == 0.0; }
    bool is_zero() const { return c0 == 0.0 && c1 == 0.0 && amp == 0.0; }
    double sup_norm() const;    // bounded functions only
    double oscillation() const; // bounded functions only
};

/// One-dimensional Gaussian mean field model: a particle at x moves to
/// a(x) + eta(b) c(x) + sqrt(Q) Z with Z standard normal. b and c must be
/// bounded. The initial law is normal(initial_mean, initial_variance).
struct GaussianMeanFieldModel {
    ScalarFunc drift_a;
    ScalarFunc drift_b;
    ScalarFunc drift_c;
    double noise_variance = 1.0;
    double initial_mean = 0.0;
    double initial_variance = 1.0;

    GaussianMeanFieldModel() = default;
    GaussianMeanFieldModel(ScalarFunc a, ScalarFunc b, ScalarFunc c, double q, double init_mean,
                           double init_var);

    double drift(double x, double eta_b_mean) const {
        return drift_a(x) + eta_b_mean * drift_c(x);
    }
};

struct GaussianMoments {
    double mean = 0.0;
    double variance = 0.0;
};

// Operation surface.

ProbabilityVector fk_phi_step(const FeynmanKacModel& model, const ProbabilityVector& eta, int n);
FiniteKernel fk_mckean_kernel(const FeynmanKacModel& model, const ProbabilityVector& eta, int n);

/// Normalizing constant of the flow at the given horizon: the product of the
/// potential means eta_p(G_p) along the exact flow, p < horizon.
double partition_function(const FeynmanKacModel& model, int horizon);

/// Particle estimate of the same product along a simulated trajectory
/// (clouds at generations 0 .. horizon-1 at least).
double partition_function(const FeynmanKacModel& model, std::span<const ParticleCloud> clouds,
                          int horizon);

ProbabilityVector gas_phi_step(const McKeanGasModel& model, const ProbabilityVector& eta);
FiniteKernel gas_kernel(const McKeanGasModel& model, const ProbabilityVector& eta);

/// One draw from the Gaussian McKean transition given the current particle
/// position and the empirical mean of b.
double gaussian_kernel_sample(const GaussianMeanFieldModel& model, double x, double eta_b_mean,
                              Rng& rng);

/// Exact flows [eta_0, ..., eta_horizon] by iterating the one-step maps.
std::vector<ProbabilityVector> exact_flow(const FeynmanKacModel& model, int horizon);
std::vector<ProbabilityVector> exact_flow(const McKeanGasModel& model, int horizon);

/// Gaussian oracle: available only for decoupled (c == 0) affine-drift
/// models, where the flow stays Gaussian; throws otherwise.
std::vector<GaussianMoments> exact_flow(const GaussianMeanFieldModel& model, int horizon);

}  // namespace mfc
