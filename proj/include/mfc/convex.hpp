#pragma once

#include <vector>

namespace mfc {

/// The two convex log-MGF envelopes whose conjugate inverses convert tail
/// levels into deviation sizes:
///   Alpha0: t -> -t - log(1 - 2t)/2       on [0, 1/2)   (squared-Gaussian envelope)
///   Alpha1: t -> e^t - 1 - t              on [0, inf)   (Bennett's function)
/// Their Legendre-Fenchel conjugates have closed forms (see conjugate_eval).
enum class ConvexFunctionId { Alpha0, Alpha1 };

/// Result of inverting a conjugate at level x, together with the analytic
/// bracket the Newton iteration was started from.
struct InverseResult {
    double value = 0.0;  // root z of conjugate(z) = x
    double lower = 0.0;  // analytic lower bound
    double upper = 0.0;  // analytic upper bound (Newton start point)
    int iterations = 0;
    bool converged = false;
};

/// Base function evaluation. Throws std::domain_error outside the domain.
double alpha_eval(ConvexFunctionId id, double t);

/// Closed-form conjugates, both increasing and vanishing only at 0:
///   Alpha0*: x -> (x - log(1+x))/2
///   Alpha1*: x -> (1+x) log(1+x) - x
/// Throws std::domain_error for negative arguments.
double conjugate_eval(ConvexFunctionId id, double lambda);

/// Inverse of the conjugate by Newton iteration started at the analytic
/// upper bracket, so iterates decrease monotonically onto the root:
///   Alpha1: root in [sqrt(2x), sqrt(2x) + x/3]
///   Alpha0: root in [2 sqrt(x) + 4x/3, 2 sqrt(x) + 2x]
/// Falls back to bisection (converged = false) if the 60-iteration cap is
/// hit. An optional trace records the Newton iterates.
InverseResult inverse(ConvexFunctionId id, double x, std::vector<double>* trace = nullptr);

/// Independent ground truth for inverse(): plain bisection of the conjugate
/// over the same analytic bracket, run to near machine precision.
double bisect_oracle(ConvexFunctionId id, double x);

/// One-Newton-step refinements of the upper brackets; tighter upper bounds
/// on the inverse than the brackets themselves.
double refined_upper(ConvexFunctionId id, double x);

/// Bennett bound on the MGF of a centered random variable Y <= 1 with
/// variance at most v: E(e^{tY}) <= exp(v * alpha1(t)).
double bennett_mgf_bound(double v, double t);

/// The sharper intermediate expression (v e^t + e^{-vt}) / (1 + v), which
/// lies below bennett_mgf_bound for all v, t >= 0.
double bennett_mgf_sharp(double v, double t);

/// Inverse of the conjugate of t -> u * alpha(v t) via positive homogeneity:
/// equals u * v * inverse(id, x / u). Degenerate scales (u or v zero) give 0.
double scaled_inverse(ConvexFunctionId id, double u, double v, double x);

}  // namespace mfc
