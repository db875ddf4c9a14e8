#include "mfc/convex.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mfc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kNewtonCap = 60;
constexpr double kUnderflowGuard = 1e-300;
constexpr double kOverflowGuard = 1e290;

struct Bracket {
    double lower;
    double upper;
};

Bracket analytic_bracket(ConvexFunctionId id, double x) {
    if (id == ConvexFunctionId::Alpha1) {
        const double s2x = std::sqrt(2.0 * x);
        return {s2x, s2x + x / 3.0};
    }
    const double sx = std::sqrt(x);
    return {2.0 * sx + 4.0 * x / 3.0, 2.0 * sx + 2.0 * x};
}

/// Newton map in fixed-point form F(z) = (alpha((alpha')^{-1}(z)) + x) / (alpha')^{-1}(z),
/// written out with (alpha1')^{-1}(z) = log(1+z) and (alpha0')^{-1}(z) = z/(2+2z).
double newton_map(ConvexFunctionId id, double x, double z) {
    if (id == ConvexFunctionId::Alpha1) {
        const double l = std::log1p(z);
        return (x + z - l) / l;
    }
    const double l = std::log1p(z);
    return 2.0 * x + l + (2.0 * x + l - z) / z;
}

void require_nonnegative(double v, const char* what) {
    if (std::isnan(v) || v < 0.0) throw std::domain_error(std::string(what) + ": argument must be >= 0");
}

}  // namespace

double alpha_eval(ConvexFunctionId id, double t) {
    require_nonnegative(t, "alpha_eval");
    if (id == ConvexFunctionId::Alpha1) return std::expm1(t) - t;
    if (t >= 0.5) throw std::domain_error("alpha_eval: Alpha0 domain is [0, 1/2)");
    return -t - 0.5 * std::log1p(-2.0 * t);
}

double conjugate_eval(ConvexFunctionId id, double lambda) {
    require_nonnegative(lambda, "conjugate_eval");
    if (id == ConvexFunctionId::Alpha1) return (1.0 + lambda) * std::log1p(lambda) - lambda;
    return 0.5 * (lambda - std::log1p(lambda));
}

double bisect_oracle(ConvexFunctionId id, double x) {
    require_nonnegative(x, "bisect_oracle");
    if (x < kUnderflowGuard) return 0.0;
    if (x > kOverflowGuard) return kInf;
    auto [lo, hi] = analytic_bracket(id, x);
    if (conjugate_eval(id, lo) >= x) return lo;
    while (conjugate_eval(id, hi) < x) hi *= 2.0;  // safety net, analytically unreachable
    for (int i = 0; i < 200 && (hi - lo) > 1e-13 * std::max(1.0, lo); ++i) {
        const double mid = 0.5 * (lo + hi);
        if (conjugate_eval(id, mid) < x)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

InverseResult inverse(ConvexFunctionId id, double x, std::vector<double>* trace) {
    require_nonnegative(x, "inverse");
    if (x < kUnderflowGuard) return {0.0, 0.0, 0.0, 0, true};
    if (x > kOverflowGuard) return {kInf, std::sqrt(2.0 * x), kInf, 0, true};

    const auto [lo, hi] = analytic_bracket(id, x);
    InverseResult result;
    result.lower = lo;
    result.upper = hi;

    double z = hi;
    if (trace) trace->push_back(z);
    for (int iter = 1; iter <= kNewtonCap; ++iter) {
        double next = newton_map(id, x, z);
        if (next > z) next = z;    // rounding beyond the fixed point
        if (next < lo) next = lo;  // iterates stay inside the bracket
        result.iterations = iter;
        if (trace) trace->push_back(next);
        const double step = z - next;
        z = next;
        const double residual = std::abs(conjugate_eval(id, z) - x);
        if (step <= 1e-14 * std::max(1.0, z) ||
            (residual <= 1e-10 * std::max(1.0, x) && step <= 1e-10 * std::max(1.0, z))) {
            result.value = z;
            result.converged = true;
            return result;
        }
    }
    result.value = bisect_oracle(id, x);
    result.converged = false;
    return result;
}

double refined_upper(ConvexFunctionId id, double x) {
    require_nonnegative(x, "refined_upper");
    if (x < kUnderflowGuard) return 0.0;
    if (id == ConvexFunctionId::Alpha1) {
        const double s2x = std::sqrt(2.0 * x);
        const double l = std::log1p(x / 3.0 + s2x);
        return (s2x + 4.0 * x / 3.0 - l) / l;
    }
    const double sx = std::sqrt(x);
    const double t = 2.0 * x + 2.0 * sx;
    const double l = std::log1p(t);
    return 2.0 * x + l + (l - 2.0 * sx) / t;
}

double bennett_mgf_bound(double v, double t) {
    require_nonnegative(v, "bennett_mgf_bound");
    require_nonnegative(t, "bennett_mgf_bound");
    return std::exp(v * (std::expm1(t) - t));
}

double bennett_mgf_sharp(double v, double t) {
    require_nonnegative(v, "bennett_mgf_sharp");
    require_nonnegative(t, "bennett_mgf_sharp");
    return (v * std::exp(t) + std::exp(-v * t)) / (1.0 + v);
}

double scaled_inverse(ConvexFunctionId id, double u, double v, double x) {
    require_nonnegative(x, "scaled_inverse");
    if (u <= 0.0 || v <= 0.0) return 0.0;
    return u * v * inverse(id, x / u).value;
}

}  // namespace mfc
