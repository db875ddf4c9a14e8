// Acceptance suite: every release gate runs here at full scale and prints
// one PASS/FAIL line per criterion. Exit status is the number of failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mfc/bounds.hpp"
#include "mfc/convex.hpp"
#include "mfc/engine.hpp"
#include "mfc/models.hpp"
#include "mfc/run.hpp"
#include "mfc/verify.hpp"

using namespace mfc;

namespace {

struct Harness {
    int failures = 0;

    void criterion(int index, const std::string& label, const std::function<bool()>& body) {
        const auto start = std::chrono::steady_clock::now();
        bool ok = false;
        std::string note;
        try {
            ok = body();
        } catch (const std::exception& e) {
            note = std::string(" (exception: ") + e.what() + ")";
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s criterion %2d: %s [%.2fs]%s\n", ok ? "PASS" : "FAIL", index, label.c_str(),
                    seconds, note.c_str());
        std::fflush(stdout);
        if (!ok) ++failures;
    }
};

std::vector<double> log_grid(double lo, double hi, int count) {
    std::vector<double> xs(count);
    for (int i = 0; i < count; ++i)
        xs[i] = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (count - 1));
    return xs;
}

const FiniteKernel kMix({{0.7, 0.3}, {0.4, 0.6}});

FeynmanKacModel reference_model(int horizon) {
    return FeynmanKacModel::homogeneous(BoundedFunction({1.0, 2.0}), kMix, 0.0,
                                        ProbabilityVector::uniform(2), horizon);
}

bool legendre_brackets() {
    for (double x : log_grid(1e-6, 1e3, 50)) {
        for (auto id : {ConvexFunctionId::Alpha0, ConvexFunctionId::Alpha1}) {
            const InverseResult r = inverse(id, x);
            const double lower = id == ConvexFunctionId::Alpha1
                                     ? std::sqrt(2.0 * x)
                                     : 2.0 * std::sqrt(x) + 4.0 * x / 3.0;
            const double upper = id == ConvexFunctionId::Alpha1
                                     ? std::sqrt(2.0 * x) + x / 3.0
                                     : 2.0 * std::sqrt(x) + 2.0 * x;
            if (!(r.converged && r.iterations <= 60)) return false;
            if (!(lower <= r.value && r.value <= upper)) return false;
            if (std::abs(r.value - bisect_oracle(id, x)) > 1e-9) return false;
        }
    }
    return true;
}

bool conjugacy_round_trip() {
    for (double x : log_grid(1e-6, 1e3, 50))
        for (auto id : {ConvexFunctionId::Alpha0, ConvexFunctionId::Alpha1})
            if (std::abs(conjugate_eval(id, inverse(id, x).value) - x) > 1e-10 * std::max(1.0, x))
                return false;
    return true;
}

bool two_velocities_oracle() {
    const auto gas = McKeanGasModel::two_velocities(0.3);
    const auto flow = exact_flow(gas, 5);
    double p = 0.3;
    for (const auto& eta : flow) {
        if (std::abs(eta[0] - p) > 1e-15) return false;
        p = p * p + (1.0 - p) * (1.0 - p);
    }
    if (std::abs(flow[1][0] - 0.58) > 1e-15) return false;
    if (std::abs(flow[2][0] - 0.5128) > 1e-15) return false;

    const double target = flow[5][0];
    const int reps = 200;
    std::vector<int> hits(reps, 0);
    parallel_for(reps, 0, [&](int r) {
        SimulationConfig config{100000, 5, 31415, static_cast<std::uint64_t>(r)};
        const Trajectory traj = simulate_trajectory(gas, config);
        const double estimate = integrate(traj.clouds[5], BoundedFunction::indicator(2, 0));
        hits[static_cast<std::size_t>(r)] = std::abs(estimate - target) <= 0.005 ? 1 : 0;
    });
    int within = 0;
    for (int h : hits) within += h;
    return within >= 198;
}

bool certificate_exceedance() {
    ExperimentSpec spec{reference_model(3)};
    spec.particles = 10000;
    spec.replications = 2000;
    spec.horizon = 3;
    spec.x_grid = {0.5, 1.0, 2.0, 3.0};
    spec.master_seed = 271828;
    spec.test_functions = {BoundedFunction::indicator(2, 0), BoundedFunction::indicator(2, 1)};
    return exceedance_experiment(spec).all_pass;
}

bool determinism() {
    ExperimentSpec spec{reference_model(2)};
    spec.particles = 2000;
    spec.replications = 500;
    spec.horizon = 2;
    spec.master_seed = 7;
    spec.threads = 1;
    const std::string serial_csv = run_all_checks(spec).to_csv();
    spec.threads = 2;
    const std::string dual_csv = run_all_checks(spec).to_csv();
    spec.threads = 4;
    const std::string quad_csv = run_all_checks(spec).to_csv();
    return serial_csv == dual_csv && serial_csv == quad_csv;
}

bool parameter_algebra() {
    const MixingParams mix(1, 0.5, 2.0, 1.0);
    const auto u = fk_uniform_params(mix, 0.25, 4);
    if (std::abs(u.varpi_2_2 - 36.5714285714285714) > 1e-12) return false;
    if (std::abs(u.params.b_star - 8.0) > 1e-12) return false;

    Rng rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        const int m = 1 + static_cast<int>(rng.next_u64() % 4);
        const double eps = 0.05 + 0.95 * rng.next_double();
        const double dm = 1.0 + 6.0 * rng.next_double();
        const double dm1 = 1.0 + 6.0 * rng.next_double();
        const MixingParams random_mix(m, eps, dm, dm1);
        for (int k : {0, 1, 2, 3})
            for (int l : {1, 2}) {
                const double ceiling = m * dm1 * std::pow(dm, k) / std::pow(eps, k + 2);
                if (varpi(random_mix, k, l) > ceiling * (1.0 + 1e-12)) return false;
            }
    }
    return true;
}

bool monotonicity_and_limits() {
    const ConcentrationParams p{0.5, 0.2, 0.9, 1.3};
    double prev_bennett = -1.0, prev_hoeffding = -1.0;
    for (double x : {0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 20.0, 100.0}) {
        const auto levels = certificate_levels(p, x, 4000);
        if (levels.bennett_eta < prev_bennett || levels.hoeffding_eta < prev_hoeffding)
            return false;
        prev_bennett = levels.bennett_eta;
        prev_hoeffding = levels.hoeffding_eta;
    }
    double prev_n_bennett = 1e300, prev_n_hoeffding = 1e300;
    for (std::int64_t n : {100, 300, 1000, 10000, 100000, 10000000}) {
        const auto levels = certificate_levels(p, 1.5, n);
        if (levels.bennett_eta > prev_n_bennett || levels.hoeffding_eta > prev_n_hoeffding)
            return false;
        prev_n_bennett = levels.bennett_eta;
        prev_n_hoeffding = levels.hoeffding_eta;
    }

    // Classical Hoeffding level at r = 0.
    const ConcentrationParams iid{0.0, 0.25, 1.7, 1.0};
    for (double x : {0.25, 1.0, 4.0}) {
        for (std::int64_t n : {100, 10000}) {
            const auto levels = certificate_levels(iid, x, n);
            const double classical =
                std::sqrt(2.0 * x / static_cast<double>(n)) * std::sqrt(iid.beta_sq);
            if (std::abs(levels.hoeffding_eta - classical) > 1e-14 * classical) return false;
        }
    }

    // Bernstein rate approaches the sharp variance scaling.
    const ConcentrationParams sharp_params{1.0, 0.25, 2.0, 1.0};
    const double lambda = 1e-3;
    const auto rates = bernstein_rates(sharp_params, lambda, 100000000);
    const double ratio = rates.rate1 * 2.0 * sharp_params.b_star * sharp_params.b_star *
                         sharp_params.sigma_bar_sq / (lambda * lambda);
    return std::abs(ratio - 1.0) <= 0.02;
}

}  // namespace

int main() {
    Harness h;

    h.criterion(1, "conjugate inverses stay in the analytic brackets", legendre_brackets);
    h.criterion(2, "conjugacy round-trip at 1e-10", conjugacy_round_trip);
    h.criterion(3, "two-velocities flow oracle and particle consistency", two_velocities_oracle);
    h.criterion(4, "exceedance frequencies stay under e^{-x} for all four certificates",
                certificate_exceedance);

    // Criteria 5-7 share one replication battery on the reference model.
    ExperimentSpec battery_spec{reference_model(3)};
    battery_spec.particles = 10000;
    battery_spec.replications = 10000;
    battery_spec.horizon = 3;
    battery_spec.master_seed = 161803;
    std::optional<Battery> shared;

    h.criterion(5, "fluctuation variances match the exact limiting sums", [&] {
        shared.emplace(battery_spec);
        return clt_variance_check(battery_spec, *shared).all_pass;
    });
    h.criterion(6, "local error fields: exact diagonal, vanishing cross-time covariance", [&] {
        return shared && wfield_covariance_check(battery_spec, *shared).all_pass;
    });
    h.criterion(7, "local error moments respect the factorial ceilings", [&] {
        if (!shared) return false;
        const auto report = khintchine_check(battery_spec, *shared);
        return report.all_pass && khintchine_moment_bound(1) == 1.0 &&
               khintchine_moment_bound(2) == 3.0 && khintchine_moment_bound(3) == 15.0;
    });
    shared.reset();

    h.criterion(8, "contraction-sum algebra reproduces hand values", parameter_algebra);
    h.criterion(9, "certificate monotonicity and classical limits", monotonicity_and_limits);
    h.criterion(10, "verification reports are byte-identical across thread counts", determinism);

    if (h.failures == 0) std::printf("all acceptance criteria passed\n");
    return h.failures;
}
