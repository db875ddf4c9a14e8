#include "mfc/bounds.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace mfc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDegenerateVariance = 1e-300;

void require_params(const ConcentrationParams& p) {
    if (!(p.r >= 0.0 && p.sigma_bar_sq >= 0.0 && p.beta_sq >= 0.0 && p.b_star >= 0.0))
        throw std::invalid_argument("ConcentrationParams: fields must be nonnegative");
}

void require_count(std::int64_t n_particles) {
    if (n_particles < 1) throw std::invalid_argument("certificate: particle count must be >= 1");
}

double bernstein_rate(double b, double a, double lambda) {
    const double denom = b * b + a * lambda;
    if (denom <= 0.0) return lambda > 0.0 ? kInf : 0.0;
    return 0.5 * lambda * lambda / denom;
}

/// Solve N lambda^2 / (2 (B^2 + A lambda)) = x for lambda >= 0.
double bernstein_deviation(double b, double a, double x, double n) {
    if (x == 0.0) return 0.0;
    return (x * a + std::sqrt(x * x * a * a + 2.0 * n * x * b * b)) / n;
}

}  // namespace

CertificateLevels certificate_levels(const ConcentrationParams& p, double x,
                                     std::int64_t n_particles) {
    require_params(p);
    require_count(n_particles);
    if (!(x >= 0.0)) throw std::invalid_argument("certificate_levels: x must be >= 0");
    const double n = static_cast<double>(n_particles);
    const double sqrt_n = std::sqrt(n);
    const double first = p.r / sqrt_n * (1.0 + inverse(ConvexFunctionId::Alpha0, x).value);
    CertificateLevels out;
    out.bennett_v = first;
    if (p.sigma_bar_sq > kDegenerateVariance)
        out.bennett_v += sqrt_n * p.sigma_bar_sq * p.b_star *
                         inverse(ConvexFunctionId::Alpha1, x / (n * p.sigma_bar_sq)).value;
    out.hoeffding_v = first + std::sqrt(2.0 * x) * std::sqrt(p.beta_sq);
    out.bennett_eta = out.bennett_v / sqrt_n;
    out.hoeffding_eta = out.hoeffding_v / sqrt_n;
    return out;
}

BernsteinRates bernstein_rates(const ConcentrationParams& p, double lambda,
                               std::int64_t n_particles) {
    require_params(p);
    require_count(n_particles);
    if (!(lambda >= 0.0)) throw std::invalid_argument("bernstein_rates: lambda must be >= 0");
    const double sqrt_n = std::sqrt(static_cast<double>(n_particles));
    const double b1 = p.b_star * std::sqrt(p.sigma_bar_sq) + std::sqrt(2.0) * p.r / sqrt_n;
    const double b2 = std::sqrt(p.beta_sq) + std::sqrt(2.0) * p.r / sqrt_n;
    if (lambda == 0.0 && (b1 == 0.0 || b2 == 0.0))
        throw std::invalid_argument("bernstein_rates: degenerate rate");
    BernsteinRates out;
    out.rate1 = bernstein_rate(b1, 2.0 * p.r + p.b_star / 3.0, lambda);
    out.rate2 = bernstein_rate(b2, 2.0 * p.r, lambda);
    return out;
}

BernsteinDeviations bernstein_deviations(const ConcentrationParams& p, double x,
                                         std::int64_t n_particles) {
    require_params(p);
    require_count(n_particles);
    if (!(x >= 0.0)) throw std::invalid_argument("bernstein_deviations: x must be >= 0");
    const double n = static_cast<double>(n_particles);
    const double sqrt_n = std::sqrt(n);
    const double b1 = p.b_star * std::sqrt(p.sigma_bar_sq) + std::sqrt(2.0) * p.r / sqrt_n;
    const double b2 = std::sqrt(p.beta_sq) + std::sqrt(2.0) * p.r / sqrt_n;
    BernsteinDeviations out;
    out.lambda1 = bernstein_deviation(b1, 2.0 * p.r + p.b_star / 3.0, x, n);
    out.lambda2 = bernstein_deviation(b2, 2.0 * p.r, x, n);
    return out;
}

TriangularArrayParams::TriangularArrayParams(std::vector<double> a, std::vector<double> b,
                                             std::vector<double> c, double d)
    : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)), d_(d) {
    if (a_.empty() || a_.size() != b_.size() || a_.size() != c_.size())
        throw std::invalid_argument("TriangularArrayParams: per-generation lists must match");
    if (!(d_ >= 0.0)) throw std::invalid_argument("TriangularArrayParams: d must be >= 0");
    for (std::size_t i = 0; i < a_.size(); ++i) {
        if (!(a_[i] <= 0.0 && 0.0 <= b_[i]))
            throw std::invalid_argument("TriangularArrayParams: need a_p <= 0 <= b_p");
        if (!(c_[i] >= 0.0)) throw std::invalid_argument("TriangularArrayParams: c_p must be >= 0");
    }
}

double TriangularArrayParams::b_star() const { return *std::max_element(b_.begin(), b_.end()); }

double TriangularArrayParams::c_bar_sq() const {
    const double bs = b_star();
    if (bs == 0.0) return 0.0;
    double acc = 0.0;
    for (double c : c_) acc += c * c;
    return acc / (bs * bs);
}

double TriangularArrayParams::delta_bar_sq() const {
    double acc = 0.0;
    for (std::size_t i = 0; i < a_.size(); ++i) {
        const double half = 0.5 * (b_[i] - a_[i]);
        acc += half * half;
    }
    return acc;
}

TriangularArrayBounds triangular_array_bounds(const TriangularArrayParams& p, double x,
                                              std::int64_t n_particles) {
    require_count(n_particles);
    if (!(x >= 0.0)) throw std::invalid_argument("triangular_array_bounds: x must be >= 0");
    const double n = static_cast<double>(n_particles);
    const double d = p.d();
    const double bs = p.b_star();
    const double cbar_sq = p.c_bar_sq();
    const double dbar = std::sqrt(p.delta_bar_sq());
    const double first = d * (1.0 + inverse(ConvexFunctionId::Alpha0, x).value);

    TriangularArrayBounds out;
    out.bennett = first;
    if (cbar_sq > kDegenerateVariance)
        out.bennett +=
            n * cbar_sq * bs * inverse(ConvexFunctionId::Alpha1, x / (n * cbar_sq)).value;
    out.hoeffding = first + dbar * std::sqrt(2.0 * x * n);
    const double sqrt_n = std::sqrt(n);
    out.bernstein_variance =
        bernstein_rate(bs * std::sqrt(cbar_sq) + std::sqrt(2.0) * d / sqrt_n, 2.0 * d + bs / 3.0, x);
    out.bernstein_oscillation = bernstein_rate(dbar + std::sqrt(2.0) * d / sqrt_n, 2.0 * d, x);
    return out;
}

MixingParams::MixingParams(int m_in, double eps, double dm, double dm1)
    : m(m_in), eps_m(eps), delta_m(dm), delta_m_minus_1(dm1) {
    if (m < 1) throw std::invalid_argument("MixingParams: m must be >= 1");
    if (!(eps_m > 0.0 && eps_m <= 1.0))
        throw std::invalid_argument("MixingParams: eps_m must lie in (0, 1]");
    if (!(delta_m >= 1.0) || !(delta_m_minus_1 >= 1.0))
        throw std::invalid_argument("MixingParams: path ratios must be >= 1");
    if (!(eps_m * eps_m <= delta_m_minus_1))
        throw std::invalid_argument("MixingParams: need eps_m^2 <= delta_{m-1}");
}

double varpi(const MixingParams& mix, int k, int l) {
    if (k < 0 || l < 1) throw std::invalid_argument("varpi: need k >= 0 and l >= 1");
    const double ratio = mix.delta_m / mix.eps_m;
    const double contraction = 1.0 - mix.eps_m * mix.eps_m / mix.delta_m_minus_1;
    return static_cast<double>(mix.m) * std::pow(ratio, k) / (1.0 - std::pow(contraction, l));
}

FkUniformParams fk_uniform_params(const MixingParams& mix, double sigma_sq, int horizon) {
    if (!(sigma_sq >= 0.0 && sigma_sq <= 1.0))
        throw std::invalid_argument("fk_uniform_params: sigma_sq must lie in [0, 1]");
    if (horizon < 0) throw std::invalid_argument("fk_uniform_params: negative horizon");
    FkUniformParams out;
    out.q_bound = mix.delta_m / mix.eps_m;
    out.contraction = 1.0 - mix.eps_m * mix.eps_m / mix.delta_m_minus_1;
    out.varpi_3_1 = varpi(mix, 3, 1);
    out.varpi_2_2 = varpi(mix, 2, 2);
    out.params.r = 4.0 * out.varpi_3_1;
    out.params.b_star = 2.0 * out.q_bound;
    out.params.beta_sq = 4.0 * out.varpi_2_2;
    out.params.sigma_bar_sq = sigma_sq * out.params.beta_sq;
    out.beta_dphi.resize(static_cast<std::size_t>(horizon) + 1);
    for (int p = 0; p <= horizon; ++p)
        out.beta_dphi[static_cast<std::size_t>(p)] =
            2.0 * out.q_bound * std::pow(out.contraction, (horizon - p) / mix.m);
    return out;
}

UniformBounds mixing_uniform_certificates(const MixingParams& mix, double sigma_sq, double x,
                                   std::int64_t n_particles) {
    if (!(sigma_sq >= 0.0 && sigma_sq <= 1.0))
        throw std::invalid_argument("mixing_uniform_certificates: sigma_sq must lie in [0, 1]");
    if (!(x >= 0.0)) throw std::invalid_argument("mixing_uniform_certificates: x must be >= 0");
    require_count(n_particles);
    const double n = static_cast<double>(n_particles);
    const double w31 = varpi(mix, 3, 1);
    const double w22 = varpi(mix, 2, 2);
    const double first = 4.0 / n * w31 * (1.0 + inverse(ConvexFunctionId::Alpha0, x).value);
    UniformBounds out;
    out.bennett = first;
    if (sigma_sq > kDegenerateVariance)
        out.bennett += 8.0 * mix.delta_m / mix.eps_m * w22 * sigma_sq *
                       inverse(ConvexFunctionId::Alpha1, x / (4.0 * sigma_sq * w22 * n)).value;
    out.hoeffding = first + 2.0 * std::sqrt(2.0 * w22 * x / n);
    return out;
}

RegularityBounds model_regularity_params(const McKeanGasModel& model) {
    // Dobrushin coefficient of the post-collision transition over all
    // (label, state) source pairs.
    std::vector<std::vector<double>> stacked;
    stacked.reserve(model.num_labels() * model.num_states());
    for (const FiniteKernel& m : model.post_collision())
        for (std::size_t x = 0; x < m.source_states(); ++x) {
            auto row = m.row(x);
            stacked.emplace_back(row.begin(), row.end());
        }
    const double beta_m = dobrushin(FiniteKernel(std::move(stacked)));
    double total_osc = 0.0;
    for (std::size_t s = 0; s < model.num_labels(); ++s) {
        const auto& a = model.collision_weights()[s];
        const auto [lo, hi] = std::minmax_element(a.begin(), a.end());
        total_osc += model.nu()[s] * (*hi - *lo);
    }
    return {beta_m * (1.0 + total_osc), beta_m * total_osc};
}

RegularityBounds model_regularity_params(const GaussianMeanFieldModel& model,
                                         std::optional<double> c_prime) {
    const double c_norm = model.drift_c.sup_norm();
    const double b_osc = model.drift_b.oscillation();
    if (c_norm == 0.0 || b_osc == 0.0) {
        // No interaction through the empirical mean: the transition is
        // measure-free and the remainder vanishes.
        return {1.0 + c_norm * b_osc, 0.0};
    }
    if (!c_prime) throw std::invalid_argument("model_regularity_params: constant C' required");
    if (!(*c_prime >= 0.0))
        throw std::invalid_argument("model_regularity_params: C' must be >= 0");
    return {1.0 + c_norm * b_osc, *c_prime * b_osc * (2.0 * c_norm + b_osc)};
}

namespace {

constexpr std::size_t kExactSigmaCap = 20;

/// max over vertex observables f in {0,1}^S of sum_x mu(x) Var_{K(x,.)}(f),
/// maximized over the given outer measures. Vertex masses are updated one
/// bit at a time along a Gray-code walk over subsets.
double sigma_sq_exact(const FiniteKernel& k, std::span<const ProbabilityVector> outer) {
    const std::size_t src = k.source_states();
    const std::size_t tgt = k.target_states();
    if (tgt > kExactSigmaCap)
        throw std::invalid_argument("local_variance_sigma: use bound mode beyond 20 states");
    std::vector<double> mass(src, 0.0);  // row mass of the current subset
    double best = 0.0;
    const std::uint64_t total = 1ULL << tgt;
    for (std::uint64_t i = 1; i < total; ++i) {
        const std::uint64_t gray = i ^ (i >> 1);
        const unsigned bit = static_cast<unsigned>(std::countr_zero(i));
        const bool added = (gray >> bit) & 1ULL;
        for (std::size_t x = 0; x < src; ++x) {
            const double w = k(x, bit);
            mass[x] += added ? w : -w;
        }
        for (const ProbabilityVector& mu : outer) {
            double acc = 0.0;
            for (std::size_t x = 0; x < src; ++x) acc += mu[x] * mass[x] * (1.0 - mass[x]);
            best = std::max(best, acc);
        }
    }
    return best;
}

std::vector<ProbabilityVector> with_diracs(std::size_t states,
                                           std::span<const ProbabilityVector> grid) {
    std::vector<ProbabilityVector> out;
    out.reserve(states + grid.size());
    for (std::size_t x = 0; x < states; ++x) out.push_back(ProbabilityVector::dirac(states, x));
    out.insert(out.end(), grid.begin(), grid.end());
    return out;
}

}  // namespace

LocalVarianceEstimate local_variance_sigma(const FeynmanKacModel& model, int n, SigmaMode mode,
                                           std::span<const ProbabilityVector> mu_grid) {
    if (mode == SigmaMode::Bound) return {0.25, false};
    if (n == 0) {
        // Initial sampling: the kernel is the constant transport onto the
        // initial law, so the conditional variance is its plain variance.
        const FiniteKernel k = FiniteKernel::constant(model.initial_law(), 1);
        const ProbabilityVector outer[] = {ProbabilityVector::dirac(1, 0)};
        return {sigma_sq_exact(k, outer), true};
    }
    const std::size_t states = model.states_at(n - 1);
    double best = 0.0;
    for (const ProbabilityVector& mu : with_diracs(states, mu_grid)) {
        const FiniteKernel k = model.mckean_kernel(mu, n - 1);
        const ProbabilityVector outer[] = {mu};
        best = std::max(best, sigma_sq_exact(k, outer));
    }
    return {best, true};
}

LocalVarianceEstimate local_variance_sigma(const McKeanGasModel& model, SigmaMode mode,
                                           std::span<const ProbabilityVector> mu_grid) {
    if (mode == SigmaMode::Bound) return {0.25, false};
    double best = 0.0;
    for (const ProbabilityVector& mu : with_diracs(model.num_states(), mu_grid)) {
        const FiniteKernel k = model.mckean_kernel(mu);
        const ProbabilityVector outer[] = {mu};
        best = std::max(best, sigma_sq_exact(k, outer));
    }
    return {best, true};
}

FkSemigroup::FkSemigroup(const FeynmanKacModel& model, int horizon) : n_(horizon) {
    if (horizon < 0 || horizon > model.max_generation())
        throw std::out_of_range("FkSemigroup: horizon out of range");
    dims_.resize(static_cast<std::size_t>(horizon) + 1);
    for (int p = 0; p <= horizon; ++p) dims_[static_cast<std::size_t>(p)] = model.states_at(p);
    prod_.resize(static_cast<std::size_t>(horizon) + 1);
    const std::size_t dn = dims_[static_cast<std::size_t>(horizon)];
    // B_n = identity; B_p = Q_p B_{p+1} with Q_p(x, y) = G_p(x) M_p(x, y).
    auto& last = prod_[static_cast<std::size_t>(horizon)];
    last.assign(dn * dn, 0.0);
    for (std::size_t i = 0; i < dn; ++i) last[i * dn + i] = 1.0;
    for (int p = horizon - 1; p >= 0; --p) {
        const std::size_t rows = dims_[static_cast<std::size_t>(p)];
        const std::size_t mid = dims_[static_cast<std::size_t>(p) + 1];
        const auto& next = prod_[static_cast<std::size_t>(p) + 1];
        const BoundedFunction& g = model.potential(p);
        const FiniteKernel& m = model.mutation(p);
        auto& cur = prod_[static_cast<std::size_t>(p)];
        cur.assign(rows * dn, 0.0);
        for (std::size_t x = 0; x < rows; ++x)
            for (std::size_t y = 0; y < mid; ++y) {
                const double w = g[x] * m(x, y);
                if (w == 0.0) continue;
                for (std::size_t z = 0; z < dn; ++z) cur[x * dn + z] += w * next[y * dn + z];
            }
    }
}

BoundedFunction FkSemigroup::apply(int p, const BoundedFunction& f) const {
    if (p < 0 || p > n_) throw std::out_of_range("FkSemigroup::apply: generation out of range");
    const std::size_t dn = dims_.back();
    if (f.size() != dn) throw std::invalid_argument("FkSemigroup::apply: dimension mismatch");
    const auto& b = prod_[static_cast<std::size_t>(p)];
    const std::size_t rows = dims_[static_cast<std::size_t>(p)];
    std::vector<double> v(rows, 0.0);
    for (std::size_t x = 0; x < rows; ++x) {
        double acc = 0.0;
        for (std::size_t z = 0; z < dn; ++z) acc += b[x * dn + z] * f[z];
        v[x] = acc;
    }
    return BoundedFunction(std::move(v));
}

BoundedFunction FkSemigroup::unit_mass(int p) const {
    return apply(p, BoundedFunction::constant(dims_.back(), 1.0));
}

double FkSemigroup::q_ratio(int p) const {
    const BoundedFunction mass = unit_mass(p);
    return mass.max() / mass.min();
}

double FkSemigroup::beta_p(int p) const {
    const BoundedFunction mass = unit_mass(p);
    const auto& b = prod_[static_cast<std::size_t>(p)];
    const std::size_t rows = dims_[static_cast<std::size_t>(p)];
    const std::size_t dn = dims_.back();
    std::vector<std::vector<double>> norm(rows, std::vector<double>(dn, 0.0));
    for (std::size_t x = 0; x < rows; ++x)
        for (std::size_t z = 0; z < dn; ++z) norm[x][z] = b[x * dn + z] / mass[x];
    return dobrushin(FiniteKernel(std::move(norm)));
}

BoundedFunction FkSemigroup::first_order(int p, const BoundedFunction& f,
                                         const ProbabilityVector& eta_p,
                                         const ProbabilityVector& eta_n) const {
    const double center = integrate(eta_n, f);
    std::vector<double> shifted(f.values());
    for (double& v : shifted) v -= center;
    const BoundedFunction pushed = apply(p, BoundedFunction(std::move(shifted)));
    const double norm = integrate(eta_p, unit_mass(p));
    std::vector<double> v(pushed.values());
    for (double& x : v) x /= norm;
    return BoundedFunction(std::move(v));
}

ConcentrationParams FkFiniteHorizonTables::params(double sigma_sq) const {
    if (!(sigma_sq >= 0.0 && sigma_sq <= 1.0))
        throw std::invalid_argument("FkFiniteHorizonTables::params: sigma_sq must lie in [0, 1]");
    ConcentrationParams out;
    for (std::size_t p = 0; p < beta_dphi.size(); ++p) {
        out.r += delta_r[p];
        out.beta_sq += beta_dphi[p] * beta_dphi[p];
        out.b_star = std::max(out.b_star, beta_dphi[p]);
    }
    out.sigma_bar_sq = sigma_sq * out.beta_sq;
    return out;
}

FkFiniteHorizonTables fk_finite_horizon_tables(const FeynmanKacModel& model, int horizon) {
    const FkSemigroup sg(model, horizon);
    FkFiniteHorizonTables t;
    const std::size_t count = static_cast<std::size_t>(horizon) + 1;
    t.q.resize(count);
    t.beta_p.resize(count);
    t.beta_dphi.resize(count);
    t.delta_r.resize(count);
    for (int p = 0; p <= horizon; ++p) {
        const auto idx = static_cast<std::size_t>(p);
        t.q[idx] = sg.q_ratio(p);
        t.beta_p[idx] = sg.beta_p(p);
        if (p == horizon) {
            t.beta_dphi[idx] = 1.0;  // identity pair, exact
            t.delta_r[idx] = 0.0;
        } else {
            t.beta_dphi[idx] = 2.0 * t.q[idx] * t.beta_p[idx];
            t.delta_r[idx] = 2.0 * t.q[idx] * t.q[idx] * t.beta_dphi[idx];
        }
    }
    return t;
}

}  // namespace mfc
