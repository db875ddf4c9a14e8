#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "mfc/verify.hpp"

using namespace mfc;

namespace {

const FiniteKernel kMix({{0.7, 0.3}, {0.4, 0.6}});

FeynmanKacModel reference_model(int horizon) {
    return FeynmanKacModel::homogeneous(BoundedFunction({1.0, 2.0}), kMix, 0.0,
                                        ProbabilityVector::uniform(2), horizon);
}

ExperimentSpec small_spec(int particles, int replications, int horizon) {
    ExperimentSpec spec{reference_model(horizon)};
    spec.particles = particles;
    spec.replications = replications;
    spec.horizon = horizon;
    spec.master_seed = 2024;
    return spec;
}

}  // namespace

TEST_CASE("the reference flow sits at the uniform fixed point") {
    // Reweighting by (1, 2) then mixing through the kernel returns uniform,
    // which pins the exact flow for every hand value below.
    const auto flow = exact_flow(reference_model(3), 3);
    for (const auto& eta : flow) CHECK(eta[0] == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("exact field variances match hand matrix algebra") {
    const auto model = reference_model(3);
    const FiniteModel variant = model;
    const auto flow = exact_flow(model, 3);
    const auto f = BoundedFunction::indicator(2, 1);

    // Zero-acceptance kernels have constant rows at the flow, so every
    // one-generation field variance is the plain variance 1/4.
    for (int p = 0; p <= 3; ++p)
        CHECK(exact_w_variance(variant, flow, p, f) == doctest::Approx(0.25).epsilon(1e-13));

    CHECK(exact_clt_variance(model, 0, f) == doctest::Approx(0.25).epsilon(1e-13));
    CHECK(exact_clt_variance(model, 1, f) ==
          doctest::Approx(0.25 + 4.0 / 225.0).epsilon(1e-13));
    CHECK(exact_clt_variance(model, 2, f) ==
          doctest::Approx(0.269041975308642).epsilon(1e-12));

    // Constants produce exactly zero limiting variance.
    CHECK(exact_clt_variance(model, 2, BoundedFunction::constant(2, 7.0)) ==
          doctest::Approx(0.0).epsilon(1e-13));
}

TEST_CASE("default test functions are unit-oscillation") {
    const auto fns = default_test_functions(2, 99);
    REQUIRE(fns.size() == 3);
    CHECK(fns[0].oscillation() == doctest::Approx(1.0));
    CHECK(fns[2].oscillation() == doctest::Approx(1.0));
    CHECK(default_test_function_ids(2) == std::vector<std::string>{"ind0", "ind1", "pm"});
}

TEST_CASE("battery statistics are reproducible and thread-count independent") {
    auto spec = small_spec(500, 200, 2);
    spec.threads = 1;
    const Battery serial(spec);
    spec.threads = 4;
    const Battery parallel(spec);
    for (int r = 0; r < 200; r += 37)
        for (int n = 0; n <= 2; ++n)
            for (int f = 0; f < 3; ++f) {
                CHECK(serial.v(r, n, f) == parallel.v(r, n, f));
                CHECK(serial.w(r, n, f) == parallel.w(r, n, f));
            }

    const auto report_a = run_all_checks(spec);
    spec.threads = 1;
    const auto report_b = run_all_checks(spec);
    CHECK(report_a.to_csv() == report_b.to_csv());
    CHECK(report_a.to_json() == report_b.to_json());
}

TEST_CASE("fluctuation and local error fields coincide at generation zero") {
    const auto spec = small_spec(400, 50, 1);
    const Battery battery(spec);
    for (int r = 0; r < 50; ++r)
        for (int f = 0; f < 3; ++f) CHECK(battery.v(r, 0, f) == battery.w(r, 0, f));
}

TEST_CASE("certificate parameters derive from the exact semigroup tables") {
    const auto spec = small_spec(100, 10, 2);
    const auto params = certificate_params(spec);
    REQUIRE(params.size() == 3);
    CHECK(params[0].r == doctest::Approx(0.0));
    CHECK(params[0].b_star == doctest::Approx(1.0));
    CHECK(params[0].beta_sq == doctest::Approx(1.0));
    CHECK(params[2].r > 0.0);
    CHECK(params[2].b_star >= 1.0);
}

TEST_CASE("exceedance check at desk scale stays under the certificate levels") {
    auto spec = small_spec(2000, 500, 2);
    spec.x_grid = {0.0, 0.5, 2.0};
    const auto report = exceedance_experiment(spec);
    CHECK(report.all_pass);
    // 4 events x 3 tail levels x 3 functions x 3 generations; the x = 0 rows
    // are vacuous (the bound is 1).
    CHECK(report.rows.size() == 4 * 3 * 3 * 3);
    for (const auto& row : report.rows) {
        CHECK(row.empirical >= 0.0);
        CHECK(row.empirical <= 1.0);
        CHECK(row.std_error == doctest::Approx(std::sqrt(row.empirical * (1.0 - row.empirical) /
                                                         500.0)));
    }
}

TEST_CASE("clt variance check at desk scale") {
    auto spec = small_spec(4000, 3000, 2);
    const auto report = clt_variance_check(spec);
    CHECK(report.all_pass);
    bool saw_positive = false;
    for (const auto& row : report.rows) {
        CHECK(row.check == "clt_variance");
        if (row.bound > 0.2) saw_positive = true;
        // Generation zero is a plain iid sample, so the sample variance
        // concentrates at the chi-square rate around the binomial value.
        if (row.generation == 0)
            CHECK(std::abs(row.empirical / row.bound - 1.0) <= 2.0 * std::sqrt(2.0 / 3000.0));
    }
    CHECK(saw_positive);
}

TEST_CASE("w-field covariance check at desk scale") {
    auto spec = small_spec(2000, 3000, 3);
    const auto report = wfield_covariance_check(spec);
    CHECK(report.all_pass);
    int diag = 0, cross = 0;
    for (const auto& row : report.rows) {
        if (row.check == "wfield_diag") ++diag;
        if (row.check == "wfield_cross") ++cross;
    }
    CHECK(diag == 4 * 3);
    CHECK(cross == 6 * 3);
}

TEST_CASE("khintchine check at desk scale") {
    auto spec = small_spec(1000, 2000, 2);
    const auto report = khintchine_check(spec);
    CHECK(report.all_pass);
    for (const auto& row : report.rows) {
        CHECK(row.x_or_m >= 1.0);
        CHECK(row.x_or_m <= 3.0);
        CHECK(row.bound == doctest::Approx(khintchine_moment_bound(static_cast<int>(row.x_or_m))));
    }
}

TEST_CASE("gas models run the battery but need explicit certificate parameters") {
    ExperimentSpec spec{McKeanGasModel::two_velocities(0.3)};
    spec.particles = 500;
    spec.replications = 300;
    spec.horizon = 2;
    spec.master_seed = 5;
    CHECK_THROWS_WITH_AS(exceedance_experiment(spec), doctest::Contains("params_override"),
                         std::invalid_argument);

    // Conservative per-generation parameters from the one-step regularity
    // bounds: composition products for the first-order part.
    const auto reg = model_regularity_params(std::get<McKeanGasModel>(spec.model));
    std::vector<ConcentrationParams> params;
    for (int n = 0; n <= 2; ++n) {
        ConcentrationParams p;
        double beta = 1.0;
        for (int j = n; j >= 0; --j) {
            p.beta_sq += beta * beta;
            p.b_star = std::max(p.b_star, beta);
            if (j > 0) p.r += reg.delta_r * beta;
            beta *= reg.beta_dphi;
        }
        p.sigma_bar_sq = 0.25 * p.beta_sq;
        params.push_back(p);
    }
    spec.params_override = params;
    const auto report = run_all_checks(spec);
    CHECK(report.all_pass);
    bool saw_clt = false;
    for (const auto& row : report.rows) saw_clt = saw_clt || row.check == "clt_variance";
    CHECK_FALSE(saw_clt);
}

TEST_CASE("report serialization carries the schema and one row per line") {
    auto spec = small_spec(200, 120, 1);
    const auto report = khintchine_check(spec);
    const std::string csv = report.to_csv();
    CHECK(csv.rfind("# schema: mfc.verify.v1\n", 0) == 0);
    CHECK(csv.find("check,generation,function_id,x_or_m,empirical,bound,std_error,pass") !=
          std::string::npos);
    const std::string json = report.to_json();
    CHECK(json.find("\"schema_version\": \"mfc.verify.v1\"") != std::string::npos);
    CHECK(json.find("\"all_pass\": true") != std::string::npos);
}
