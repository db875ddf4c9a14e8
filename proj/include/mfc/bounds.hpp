#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mfc/convex.hpp"
#include "mfc/measure.hpp"
#include "mfc/models.hpp"

namespace mfc {

/// Scalar bundle feeding every certificate:
///   r            second-order (remainder) amplitude,
///   sigma_bar_sq local-variance weighted sum over the first-order semigroup,
///   beta_sq      sum of squared first-order contraction norms,
///   b_star       largest first-order contraction norm.
struct ConcentrationParams {
    double r = 0.0;
    double sigma_bar_sq = 0.0;
    double beta_sq = 0.0;
    double b_star = 0.0;
};

/// Deviation levels exceeded with probability at most e^{-x}. The v_scale
/// members bound sqrt(N) (eta^N - eta)(f); eta_scale divides by sqrt(N).
struct CertificateLevels {
    double bennett_v = 0.0;
    double hoeffding_v = 0.0;
    double bennett_eta = 0.0;
    double hoeffding_eta = 0.0;
};

/// Bennett and Hoeffding deviation certificates for one test function of
/// unit oscillation.
CertificateLevels certificate_levels(const ConcentrationParams& p, double x,
                                     std::int64_t n_particles);

/// Bernstein exponential rates (nats per particle): each lower-bounds
/// -(1/N) log P((eta^N - eta)(f) >= r/N + lambda).
struct BernsteinRates {
    double rate1 = 0.0;  // variance-scaled form
    double rate2 = 0.0;  // oscillation-scaled form
};
BernsteinRates bernstein_rates(const ConcentrationParams& p, double lambda,
                               std::int64_t n_particles);

/// Deviations lambda solving N rate(lambda) = x, turning the Bernstein rates
/// into events at tail level e^{-x}.
struct BernsteinDeviations {
    double lambda1 = 0.0;
    double lambda2 = 0.0;
};
BernsteinDeviations bernstein_deviations(const ConcentrationParams& p, double x,
                                         std::int64_t n_particles);

/// Per-generation envelope of a triangular array of centered, conditionally
/// independent summand blocks: supports [a_p, b_p], conditional second
/// moments c_p^2, plus a perturbation amplitude d.
class TriangularArrayParams {
  public:
    TriangularArrayParams(std::vector<double> a, std::vector<double> b, std::vector<double> c,
                          double d);

    std::size_t generations() const { return a_.size(); }
    double d() const { return d_; }
    double b_star() const;        // sup b_p
    double c_bar_sq() const;      // b_star^{-2} sum c_p^2
    double delta_bar_sq() const;  // sum ((b_p - a_p)/2)^2

  private:
    std::vector<double> a_, b_, c_;
    double d_ = 0.0;
};

/// The four triangular-array bounds. The Bennett/Hoeffding members are sum
/// thresholds at tail level e^{-x}; the Bernstein members are the exponential
/// rates evaluated at deviation lambda = x (both rearrangements of the same
/// tail estimate).
struct TriangularArrayBounds {
    double bennett = 0.0;
    double hoeffding = 0.0;
    double bernstein_variance = 0.0;
    double bernstein_oscillation = 0.0;
};
TriangularArrayBounds triangular_array_bounds(const TriangularArrayParams& p, double x,
                                              std::int64_t n_particles);

/// Uniform minorization data for a time-homogeneous mutation kernel:
/// M^m(x, .) >= eps_m M^m(y, .), together with the worst m-step and
/// (m-1)-step potential path ratios.
struct MixingParams {
    int m = 1;
    double eps_m = 1.0;
    double delta_m = 1.0;
    double delta_m_minus_1 = 1.0;

    MixingParams(int m, double eps_m, double delta_m, double delta_m_minus_1);
};

/// Geometric-series contraction sums: varpi_{k,l}(m) bounds
/// sum_p q_{p,n}^k beta(P_{p,n})^l uniformly in the horizon.
double varpi(const MixingParams& mix, int k, int l);

/// Horizon-uniform certificate parameters for time-homogeneous models under
/// the minorization condition, with the per-pair first-order bounds exposed
/// for sharper finite-horizon sums.
struct FkUniformParams {
    ConcentrationParams params;
    double q_bound = 1.0;      // delta_m / eps_m
    double contraction = 0.0;  // 1 - eps_m^2 / delta_{m-1}, per m-block
    double varpi_3_1 = 0.0;
    double varpi_2_2 = 0.0;
    std::vector<double> beta_dphi;  // bound on the p -> horizon first-order norm
};
FkUniformParams fk_uniform_params(const MixingParams& mix, double sigma_sq, int horizon);

/// Horizon-uniform Bennett/Hoeffding deviation levels in eta-scale.
struct UniformBounds {
    double bennett = 0.0;
    double hoeffding = 0.0;
};
UniformBounds mixing_uniform_certificates(const MixingParams& mix, double sigma_sq, double x,
                                   std::int64_t n_particles);

/// One-step first-order contraction and remainder bounds for the collision
/// and Gaussian models. The Gaussian remainder carries an unspecified
/// envelope constant that must be supplied by the caller whenever both the
/// interaction coefficient and the oscillation of b are nonzero.
struct RegularityBounds {
    double beta_dphi = 0.0;
    double delta_r = 0.0;
};
RegularityBounds model_regularity_params(const McKeanGasModel& model);
RegularityBounds model_regularity_params(const GaussianMeanFieldModel& model,
                                         std::optional<double> c_prime = std::nullopt);

/// Local conditional-variance parameter. Bound mode returns 1/4 (the largest
/// variance of a unit-oscillation observable). Exact mode maximizes over
/// vertex observables and a caller-supplied measure grid plus all Diracs; it
/// is a lower bound of the true supremum over all measures.
enum class SigmaMode { Bound, Exact };
struct LocalVarianceEstimate {
    double value = 0.25;
    bool exact_mode = false;  // true: grid maximum, a lower bound of the sup
};
LocalVarianceEstimate local_variance_sigma(const FeynmanKacModel& model, int n, SigmaMode mode,
                                           std::span<const ProbabilityVector> mu_grid = {});
LocalVarianceEstimate local_variance_sigma(const McKeanGasModel& model, SigmaMode mode,
                                           std::span<const ProbabilityVector> mu_grid = {});

/// Dense backward products of the unnormalized two-generation operators of a
/// finite Feynman-Kac model: everything needed to evaluate the first-order
/// semigroup fields and their norms exactly.
class FkSemigroup {
  public:
    FkSemigroup(const FeynmanKacModel& model, int horizon);

    int horizon() const { return n_; }
    /// Q_{p,n} f as a function on generation-p states.
    BoundedFunction apply(int p, const BoundedFunction& f) const;
    /// Q_{p,n} 1.
    BoundedFunction unit_mass(int p) const;
    /// sup_x Q_{p,n}1(x) / inf_x Q_{p,n}1(x).
    double q_ratio(int p) const;
    /// Dobrushin coefficient of the normalized transport P_{p,n}.
    double beta_p(int p) const;
    /// First-order field d_{eta_p} Phi_{p,n}(f) = Q_{p,n}(f - eta_n(f)) / eta_p(Q_{p,n}1).
    BoundedFunction first_order(int p, const BoundedFunction& f, const ProbabilityVector& eta_p,
                                const ProbabilityVector& eta_n) const;

  private:
    int n_ = 0;
    std::vector<std::size_t> dims_;          // states per generation 0..n
    std::vector<std::vector<double>> prod_;  // B_p, row-major dims_[p] x dims_[n]
};

/// Exact per-pair tables for a finite model at a fixed horizon, with the
/// certified parameter bundle they imply. The identity pair p = horizon uses
/// its exact values (first-order norm 1, zero remainder).
struct FkFiniteHorizonTables {
    std::vector<double> q;          // q_{p,n}
    std::vector<double> beta_p;     // beta(P_{p,n})
    std::vector<double> beta_dphi;  // 2 q beta(P), exact 1 at p = n
    std::vector<double> delta_r;    // 2 q^2 beta_dphi, exact 0 at p = n

    ConcentrationParams params(double sigma_sq = 0.25) const;
};
FkFiniteHorizonTables fk_finite_horizon_tables(const FeynmanKacModel& model, int horizon);

}  // namespace mfc
