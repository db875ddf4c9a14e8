#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "mfc/bounds.hpp"
#include "mfc/rng.hpp"

using namespace mfc;

namespace {

const FiniteKernel kMix({{0.7, 0.3}, {0.4, 0.6}});

FeynmanKacModel acceptance_model(int horizon = 4) {
    return FeynmanKacModel::homogeneous(BoundedFunction({1.0, 2.0}), kMix, 0.0,
                                        ProbabilityVector::uniform(2), horizon);
}

}  // namespace

TEST_CASE("certificate_levels: vanishing tail level keeps only the remainder term") {
    const ConcentrationParams p{2.0, 0.25, 1.0, 1.0};
    const auto levels = certificate_levels(p, 0.0, 100);
    CHECK(levels.bennett_v == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(levels.hoeffding_v == doctest::Approx(0.2).epsilon(1e-14));
}

TEST_CASE("certificate_levels: classical Hoeffding level at r = 0") {
    const ConcentrationParams p{0.0, 0.25, 1.0, 1.0};
    const auto levels = certificate_levels(p, 2.0, 100);
    CHECK(levels.hoeffding_eta == doctest::Approx(std::sqrt(2.0 * 2.0 / 100.0)).epsilon(1e-14));
    CHECK(levels.hoeffding_eta == doctest::Approx(0.2).epsilon(1e-14));
}

TEST_CASE("certificate_levels: Bennett term respects the conjugate-inverse bracket") {
    const ConcentrationParams p{0.0, 0.25, 1.0, 1.0};
    const auto levels = certificate_levels(p, 1.0, 100);
    // 10 * 0.25 * inverse(0.04): bracket [sqrt(0.08), sqrt(0.08) + 0.04/3].
    const double lo = 2.5 * std::sqrt(0.08);
    const double hi = 2.5 * (std::sqrt(0.08) + 0.04 / 3.0);
    CHECK(levels.bennett_v >= lo - 1e-12);
    CHECK(levels.bennett_v <= hi + 1e-12);

    // Degenerate variance: only the remainder survives.
    const ConcentrationParams q{3.0, 0.0, 1.0, 1.0};
    const auto degenerate = certificate_levels(q, 5.0, 100);
    CHECK(degenerate.bennett_v ==
          doctest::Approx(0.3 * (1.0 + inverse(ConvexFunctionId::Alpha0, 5.0).value)));
}

TEST_CASE("bernstein_rates: hand value and degenerate cases") {
    const ConcentrationParams p{0.0, 0.25, 1.0, 1.0};
    const auto z = bernstein_rates(p, 0.0, 1000);
    CHECK(z.rate1 == 0.0);
    CHECK(z.rate2 == 0.0);

    // r = 0, b* = 1, sigma_bar = 1/2, lambda = 0.1 at large N.
    const auto r = bernstein_rates(p, 0.1, 1000000000);
    CHECK(r.rate1 == doctest::Approx(0.005 / (0.25 + 0.1 / 3.0)).epsilon(1e-6));
    CHECK(r.rate1 == doctest::Approx(0.017647).epsilon(1e-4));

    const ConcentrationParams degenerate{0.0, 0.0, 0.0, 0.0};
    CHECK_THROWS_WITH_AS(bernstein_rates(degenerate, 0.0, 100), "bernstein_rates: degenerate rate",
                         std::invalid_argument);
}

TEST_CASE("bernstein_deviations invert the rates") {
    const ConcentrationParams p{1.5, 0.3, 1.2, 1.1};
    for (double x : {0.5, 1.0, 3.0}) {
        const auto dev = bernstein_deviations(p, x, 5000);
        const auto rates = bernstein_rates(p, dev.lambda1, 5000);
        CHECK(5000.0 * rates.rate1 == doctest::Approx(x).epsilon(1e-10));
        const auto rates2 = bernstein_rates(p, dev.lambda2, 5000);
        CHECK(5000.0 * rates2.rate2 == doctest::Approx(x).epsilon(1e-10));
    }
    const auto zero = bernstein_deviations(p, 0.0, 5000);
    CHECK(zero.lambda1 == 0.0);
}

TEST_CASE("triangular_array_bounds: degenerate tail level and single-generation Hoeffding") {
    const TriangularArrayParams tap({-1.0}, {1.0}, {1.0}, 2.0);
    const auto at_zero = triangular_array_bounds(tap, 0.0, 100);
    CHECK(at_zero.bennett == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(at_zero.hoeffding == doctest::Approx(2.0).epsilon(1e-14));

    const TriangularArrayParams centered({-1.0}, {1.0}, {1.0}, 0.0);
    const auto h = triangular_array_bounds(centered, 2.0, 400);
    CHECK(h.hoeffding == doctest::Approx(std::sqrt(2.0 * 2.0 * 400.0)).epsilon(1e-14));
}

TEST_CASE("triangular_array_bounds reduce to certificate_levels under the parameter substitution") {
    // Substitution with b* = 1: a_p = -beta_p, b_p = beta_p, c_p = sigma_p beta_p,
    // d = r. Then c_bar^2 = sigma_bar^2 and both routes agree exactly.
    const std::vector<double> beta_dphi = {1.0, 0.8, 0.6};
    const double sigma_p = 0.5;
    std::vector<double> a, b, c;
    double beta_sq = 0.0, sigma_bar_sq = 0.0;
    for (double bd : beta_dphi) {
        a.push_back(-bd);
        b.push_back(bd);
        c.push_back(sigma_p * bd);
        beta_sq += bd * bd;
        sigma_bar_sq += sigma_p * sigma_p * bd * bd;
    }
    const double r = 0.7;
    const TriangularArrayParams tap(a, b, c, r);
    const ConcentrationParams params{r, sigma_bar_sq, beta_sq, 1.0};
    for (double x : {0.0, 0.5, 1.0, 2.5}) {
        const auto lemma = triangular_array_bounds(tap, x, 900);
        const auto thm = certificate_levels(params, x, 900);
        // The array sum runs at sqrt(N) times the fluctuation scale.
        CHECK(lemma.bennett == doctest::Approx(30.0 * thm.bennett_v).epsilon(1e-12));
        CHECK(lemma.hoeffding == doctest::Approx(30.0 * thm.hoeffding_v).epsilon(1e-12));
        const auto rates = bernstein_rates(params, x, 900);
        CHECK(lemma.bernstein_variance == doctest::Approx(rates.rate1).epsilon(1e-12));
        CHECK(lemma.bernstein_oscillation == doctest::Approx(rates.rate2).epsilon(1e-12));
    }

    // With b* > 1 the normalized triangular-array route is at least as sharp.
    std::vector<double> a2, b2, c2;
    for (double bd : {2.0, 1.5, 1.0}) {
        a2.push_back(-bd);
        b2.push_back(bd);
        c2.push_back(0.5 * bd);
    }
    const TriangularArrayParams tap2(a2, b2, c2, r);
    const ConcentrationParams params2{r, 0.25 * (4.0 + 2.25 + 1.0), 4.0 + 2.25 + 1.0, 2.0};
    for (double x : {0.5, 1.0, 2.5}) {
        const auto lemma = triangular_array_bounds(tap2, x, 900);
        const auto thm = certificate_levels(params2, x, 900);
        CHECK(lemma.bennett <= 30.0 * thm.bennett_v + 1e-12);
    }
}

TEST_CASE("varpi reference values and the coarse ceiling") {
    const MixingParams mix(1, 0.5, 2.0, 1.0);
    CHECK(varpi(mix, 2, 2) == doctest::Approx(36.5714285714285714).epsilon(1e-13));
    CHECK(varpi(mix, 3, 1) == doctest::Approx(256.0).epsilon(1e-13));

    const MixingParams perfect(1, 1.0, 1.0, 1.0);
    CHECK(varpi(perfect, 2, 2) == doctest::Approx(1.0));
    CHECK(varpi(perfect, 3, 1) == doctest::Approx(1.0));

    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const int m = 1 + static_cast<int>(rng.next_u64() % 3);
        const double eps = 0.05 + 0.95 * rng.next_double();
        const double dm = 1.0 + 4.0 * rng.next_double();
        const double dm1 = 1.0 + 4.0 * rng.next_double();
        const MixingParams random_mix(m, eps, dm, dm1);
        // The ceiling is attained exactly at l = 1, so compare with relative slack.
        for (int k : {0, 1, 2, 3})
            for (int l : {1, 2})
                CHECK(varpi(random_mix, k, l) <=
                      m * dm1 * std::pow(dm, k) / std::pow(eps, k + 2) * (1.0 + 1e-12));
    }
}

TEST_CASE("fk_uniform_params assembles the certified bundle") {
    const MixingParams mix(1, 0.5, 2.0, 1.0);
    const auto u = fk_uniform_params(mix, 0.25, 6);
    CHECK(u.q_bound == doctest::Approx(4.0));
    CHECK(u.params.b_star == doctest::Approx(8.0).epsilon(1e-13));
    CHECK(u.params.beta_sq == doctest::Approx(4.0 * 36.5714285714285714).epsilon(1e-12));
    CHECK(u.params.sigma_bar_sq == doctest::Approx(36.5714285714285714).epsilon(1e-12));
    CHECK(u.params.r == doctest::Approx(1024.0).epsilon(1e-12));
    REQUIRE(u.beta_dphi.size() == 7);
    // One-step forgetting with contraction 3/4 per block.
    CHECK(u.beta_dphi[6] == doctest::Approx(8.0));
    CHECK(u.beta_dphi[5] == doctest::Approx(8.0 * 0.75));
    CHECK(u.beta_dphi[0] == doctest::Approx(8.0 * std::pow(0.75, 6)).epsilon(1e-12));

    const MixingParams perfect(1, 1.0, 1.0, 1.0);
    const auto v = fk_uniform_params(perfect, 0.25, 3);
    CHECK(v.beta_dphi[3] == doctest::Approx(2.0));
    CHECK(v.beta_dphi[2] == doctest::Approx(0.0));

    CHECK_THROWS_AS(fk_uniform_params(mix, 1.5, 3), std::invalid_argument);
}

TEST_CASE("mixing_uniform_certificates: hand values and monotonicity") {
    const MixingParams perfect(1, 1.0, 1.0, 1.0);
    const auto at_zero = mixing_uniform_certificates(perfect, 0.25, 0.0, 10000);
    CHECK(at_zero.bennett == doctest::Approx(4.0 / 10000.0).epsilon(1e-12));
    CHECK(at_zero.hoeffding == doctest::Approx(4.0 / 10000.0).epsilon(1e-12));

    const auto one = mixing_uniform_certificates(perfect, 0.25, 1.0, 10000);
    CHECK(one.hoeffding == doctest::Approx(4.0 / 10000.0 *
                                               (1.0 + inverse(ConvexFunctionId::Alpha0, 1.0).value) +
                                           2.0 * std::sqrt(2.0 / 10000.0))
                               .epsilon(1e-12));

    // Same computation through the uniform parameter bundle.
    const MixingParams mix(1, 0.5, 2.0, 1.0);
    for (double x : {0.0, 0.5, 1.0, 3.0}) {
        const auto direct = mixing_uniform_certificates(mix, 0.25, x, 5000);
        const auto via_params = certificate_levels(fk_uniform_params(mix, 0.25, 0).params, x, 5000);
        CHECK(direct.bennett == doctest::Approx(via_params.bennett_eta).epsilon(1e-12));
        CHECK(direct.hoeffding == doctest::Approx(via_params.hoeffding_eta).epsilon(1e-12));
    }

    double prev = -1.0;
    for (double x : {0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0}) {
        const auto b = mixing_uniform_certificates(mix, 0.25, x, 5000);
        CHECK(b.bennett >= prev);
        prev = b.bennett;
    }
}

TEST_CASE("certificates are monotone in x and in N") {
    const ConcentrationParams p{0.5, 0.2, 0.9, 1.3};
    double prev_b = -1.0, prev_h = -1.0;
    for (double x : {0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 20.0}) {
        const auto levels = certificate_levels(p, x, 4000);
        CHECK(levels.bennett_eta >= prev_b - 1e-15);
        CHECK(levels.hoeffding_eta >= prev_h - 1e-15);
        prev_b = levels.bennett_eta;
        prev_h = levels.hoeffding_eta;
    }
    double prev_bn = 1e300, prev_hn = 1e300;
    for (std::int64_t n : {100, 1000, 10000, 100000}) {
        const auto levels = certificate_levels(p, 1.0, n);
        CHECK(levels.bennett_eta <= prev_bn + 1e-15);
        CHECK(levels.hoeffding_eta <= prev_hn + 1e-15);
        prev_bn = levels.bennett_eta;
        prev_hn = levels.hoeffding_eta;
    }
}

TEST_CASE("bernstein rate1 approaches the sharp variance scaling") {
    const ConcentrationParams p{1.0, 0.25, 2.0, 1.0};
    const double lambda = 1e-3;
    const auto rates = bernstein_rates(p, lambda, 100000000);
    const double sharp = rates.rate1 * 2.0 * p.b_star * p.b_star * p.sigma_bar_sq /
                         (lambda * lambda);
    CHECK(std::abs(sharp - 1.0) < 0.02);
}

TEST_CASE("model regularity bounds for the gas and Gaussian families") {
    const auto gas = McKeanGasModel::two_velocities(0.3);
    const auto g = model_regularity_params(gas);
    CHECK(g.beta_dphi == doctest::Approx(3.0));
    CHECK(g.delta_r == doctest::Approx(2.0));

    // Collision profile constant in the state: no interaction at all.
    const auto flat = McKeanGasModel({1.0, 1.0}, {{0.5, 0.5}, {0.5, 0.5}},
                                     {FiniteKernel::identity(2), FiniteKernel::identity(2)},
                                     ProbabilityVector::uniform(2));
    CHECK(model_regularity_params(flat).delta_r == doctest::Approx(0.0));

    GaussianMeanFieldModel decoupled({0.0, 0.5, 0.0, 1.0}, {1.0, 0.0, 0.5, 1.0},
                                     {0.0, 0.0, 0.0, 1.0}, 1.0, 0.0, 1.0);
    const auto d = model_regularity_params(decoupled);
    CHECK(d.beta_dphi == doctest::Approx(1.0));
    CHECK(d.delta_r == doctest::Approx(0.0));

    GaussianMeanFieldModel coupled({0.0, 0.5, 0.0, 1.0}, {0.0, 0.0, 1.0, 1.0},
                                   {0.5, 0.0, 0.25, 1.0}, 1.0, 0.0, 1.0);
    CHECK_THROWS_WITH_AS(model_regularity_params(coupled), doctest::Contains("C' required"),
                         std::invalid_argument);
    const auto c = model_regularity_params(coupled, 1.5);
    CHECK(c.beta_dphi == doctest::Approx(1.0 + 0.75 * 2.0));
    CHECK(c.delta_r == doctest::Approx(1.5 * 2.0 * (2.0 * 0.75 + 2.0)));
}

TEST_CASE("local variance: exact maxima and the 1/4 ceiling") {
    // Identity post-collision with state-free weights: rows are Diracs for
    // every measure, so there is no conditional variance anywhere.
    const auto deterministic = McKeanGasModel({1.0, 1.0}, {{0.5, 0.5}, {0.5, 0.5}},
                                              {FiniteKernel::identity(2), FiniteKernel::identity(2)},
                                              ProbabilityVector::uniform(2));
    const auto zero = local_variance_sigma(deterministic, SigmaMode::Exact);
    CHECK(zero.value == doctest::Approx(0.0));
    CHECK(zero.exact_mode);

    // A fair-coin row realizes the 1/4 ceiling.
    auto model = FeynmanKacModel::homogeneous(BoundedFunction({1.0, 1.0}),
                                              FiniteKernel({{0.5, 0.5}, {0.5, 0.5}}), 1.0,
                                              ProbabilityVector::uniform(2), 2);
    const auto quarter = local_variance_sigma(model, 1, SigmaMode::Exact);
    CHECK(quarter.value == doctest::Approx(0.25).epsilon(1e-12));

    const auto bound = local_variance_sigma(model, 1, SigmaMode::Bound);
    CHECK(bound.value == doctest::Approx(0.25));
    CHECK_FALSE(bound.exact_mode);

    // The exact-mode value never exceeds the ceiling.
    auto tilted = acceptance_model();
    for (int n : {0, 1, 2}) {
        const auto est = local_variance_sigma(tilted, n, SigmaMode::Exact);
        CHECK(est.value <= 0.25 + 1e-12);
    }

    // Exact enumeration is capped at 20 target states.
    std::vector<std::vector<double>> rows(21, std::vector<double>(21, 1.0 / 21.0));
    auto wide = FeynmanKacModel::homogeneous(BoundedFunction::constant(21, 1.0),
                                             FiniteKernel(rows), 1.0,
                                             ProbabilityVector::uniform(21), 2);
    CHECK_THROWS_WITH_AS(local_variance_sigma(wide, 1, SigmaMode::Exact),
                         doctest::Contains("bound mode"), std::invalid_argument);
    CHECK(local_variance_sigma(wide, 1, SigmaMode::Bound).value == doctest::Approx(0.25));
}

TEST_CASE("degenerate certificates propagate to +infinity") {
    // A tiny but nonzero variance with a huge tail level pushes the Bennett
    // argument past the overflow guard; the certificate becomes vacuous but
    // stays well defined.
    const ConcentrationParams p{0.0, 1e-285, 1.0, 1.0};
    const auto levels = certificate_levels(p, 1e10, 1);
    CHECK(std::isinf(levels.bennett_v));
    CHECK(std::isfinite(levels.hoeffding_v));
    CHECK(1.0 <= levels.bennett_v);  // any sample exceedance count is zero
}

TEST_CASE("finite-horizon semigroup tables match hand matrix products") {
    auto model = acceptance_model();
    const auto t = fk_finite_horizon_tables(model, 3);
    REQUIRE(t.q.size() == 4);
    // Q 1 = (1, 2), Q^2 1 = (1.3, 3.2), Q^3 1 = (1.87, 4.88).
    CHECK(t.q[3] == doctest::Approx(1.0));
    CHECK(t.q[2] == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(t.q[1] == doctest::Approx(3.2 / 1.3).epsilon(1e-13));
    CHECK(t.q[0] == doctest::Approx(4.88 / 1.87).epsilon(1e-13));
    CHECK(t.beta_p[3] == doctest::Approx(1.0));
    CHECK(t.beta_p[2] == doctest::Approx(0.3).epsilon(1e-13));
    // P_{1,3} rows: (0.73, 0.57)/1.3 and (1.52, 1.68)/3.2.
    CHECK(t.beta_p[1] == doctest::Approx(0.73 / 1.3 - 1.52 / 3.2).epsilon(1e-12));
    CHECK(t.beta_dphi[3] == doctest::Approx(1.0));
    CHECK(t.beta_dphi[2] == doctest::Approx(2.0 * 2.0 * 0.3).epsilon(1e-12));
    CHECK(t.delta_r[3] == doctest::Approx(0.0));
    CHECK(t.delta_r[2] == doctest::Approx(2.0 * 4.0 * 1.2).epsilon(1e-12));

    // The mixing-based ceilings dominate the exact tables.
    const MixingParams mix(1, 0.5, 2.0, 1.0);
    const auto u = fk_uniform_params(mix, 0.25, 3);
    for (std::size_t p = 0; p < 4; ++p) {
        CHECK(t.q[p] <= u.q_bound + 1e-12);
        CHECK(t.beta_dphi[p] <= u.beta_dphi[p] + 1e-12);
    }
    const auto params = t.params();
    CHECK(params.b_star <= u.params.b_star);
    CHECK(params.beta_sq <= u.params.beta_sq);
    CHECK(params.r <= u.params.r);
    CHECK(params.sigma_bar_sq == doctest::Approx(0.25 * params.beta_sq));
}

TEST_CASE("mixing parameter validation") {
    CHECK_THROWS_AS(MixingParams(0, 0.5, 2.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(MixingParams(1, 0.0, 2.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(MixingParams(1, 1.5, 2.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(MixingParams(1, 0.5, 0.5, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(TriangularArrayParams({0.5}, {1.0}, {1.0}, 0.0), std::invalid_argument);
}
