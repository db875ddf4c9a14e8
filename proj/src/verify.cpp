#include "mfc/verify.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <utility>

#include "json.hpp"
#include "mfc/csv.hpp"
#include "mfc/rng.hpp"

namespace mfc {

namespace {

constexpr const char* kReportSchema = "mfc.verify.v1";

struct Moments {
    double mean = 0.0;
    double m2 = 0.0;  // central second moment
    double m4 = 0.0;  // central fourth moment
};

Moments central_moments(std::span<const double> xs) {
    Moments out;
    const double n = static_cast<double>(xs.size());
    for (double x : xs) out.mean += x;
    out.mean /= n;
    for (double x : xs) {
        const double d = x - out.mean;
        out.m2 += d * d;
        out.m4 += d * d * d * d;
    }
    out.m2 /= n;
    out.m4 /= n;
    return out;
}

double sample_variance(std::span<const double> xs) {
    const Moments m = central_moments(xs);
    const double n = static_cast<double>(xs.size());
    return m.m2 * n / (n - 1.0);
}

}  // namespace

void parallel_for(int tasks, int threads, const std::function<void(int)>& body) {
    if (tasks <= 0) return;
    int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    if (workers < 1) workers = 1;
    if (workers > tasks) workers = tasks;
    if (workers == 1) {
        for (int i = 0; i < tasks; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= tasks) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

void ExperimentReport::add(CheckRow row) {
    all_pass = all_pass && row.pass;
    rows.push_back(std::move(row));
}

void ExperimentReport::merge(const ExperimentReport& other) {
    all_pass = all_pass && other.all_pass;
    rows.insert(rows.end(), other.rows.begin(), other.rows.end());
}

std::string ExperimentReport::to_csv() const {
    std::string out = "# schema: ";
    out += kReportSchema;
    out += "\ncheck,generation,function_id,x_or_m,empirical,bound,std_error,pass\n";
    for (const CheckRow& r : rows) {
        out += r.check;
        out += ',';
        out += std::to_string(r.generation);
        out += ',';
        out += r.function_id;
        out += ',';
        out += format_double(r.x_or_m);
        out += ',';
        out += format_double(r.empirical);
        out += ',';
        out += format_double(r.bound);
        out += ',';
        out += format_double(r.std_error);
        out += ',';
        out += r.pass ? '1' : '0';
        out += '\n';
    }
    return out;
}

std::string ExperimentReport::to_json() const {
    nlohmann::ordered_json doc;
    doc["schema_version"] = kReportSchema;
    doc["all_pass"] = all_pass;
    doc["rows"] = nlohmann::ordered_json::array();
    for (const CheckRow& r : rows) {
        nlohmann::ordered_json row;
        row["check"] = r.check;
        row["generation"] = r.generation;
        row["function_id"] = r.function_id;
        row["x_or_m"] = r.x_or_m;
        row["empirical"] = r.empirical;
        row["bound"] = r.bound;
        row["std_error"] = r.std_error;
        row["pass"] = r.pass;
        doc["rows"].push_back(std::move(row));
    }
    return doc.dump(2) + "\n";
}

std::vector<BoundedFunction> default_test_functions(std::size_t states, std::uint64_t seed) {
    std::vector<BoundedFunction> out;
    for (std::size_t s = 0; s < states; ++s) out.push_back(BoundedFunction::indicator(states, s));
    Rng rng = Rng::stream(seed, 0x5157ULL);
    std::vector<double> pm(states);
    bool mixed = false;
    while (!mixed) {
        for (double& v : pm) v = rng.next_u64() & 1 ? 0.5 : -0.5;
        for (double v : pm) mixed = mixed || v != pm.front();
        if (states == 1) break;
    }
    out.push_back(BoundedFunction(std::move(pm)));
    return out;
}

std::vector<std::string> default_test_function_ids(std::size_t states) {
    std::vector<std::string> ids;
    for (std::size_t s = 0; s < states; ++s) ids.push_back("ind" + std::to_string(s));
    ids.push_back("pm");
    return ids;
}

namespace {

std::size_t model_states(const FiniteModel& model) {
    return std::visit(
        [](const auto& m) -> std::size_t {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, FeynmanKacModel>)
                return m.initial_law().size();
            else
                return m.num_states();
        },
        model);
}

std::vector<ProbabilityVector> model_flow(const FiniteModel& model, int horizon) {
    return std::visit([horizon](const auto& m) { return exact_flow(m, horizon); }, model);
}

/// One replication: simulate the chain on its private stream and record
/// the fluctuation and local-error fields for every generation and test
/// function. Kernels are built once per generation.
template <typename Model>
void run_replication(const Model& model, const ExperimentSpec& spec,
                     std::span<const ProbabilityVector> flow,
                     std::span<const BoundedFunction> functions, int replication, double* v_out,
                     double* w_out) {
    const int n_particles = spec.particles;
    const double scale = std::sqrt(static_cast<double>(n_particles));
    const std::size_t f_count = functions.size();
    Rng rng = Rng::stream(spec.master_seed, static_cast<std::uint64_t>(replication));

    std::vector<std::int32_t> states(static_cast<std::size_t>(n_particles));
    const ProbabilityVector& eta0 = flow[0];
    for (auto& s : states) s = sample_index(eta0, rng.next_double());

    auto empirical_of = [&](const BoundedFunction& f) {
        double acc = 0.0;
        for (std::int32_t s : states) acc += f[static_cast<std::size_t>(s)];
        return acc / static_cast<double>(n_particles);
    };

    std::size_t space = eta0.size();
    for (std::size_t fi = 0; fi < f_count; ++fi) {
        const double emp = empirical_of(functions[fi]);
        const double exact = integrate(eta0, functions[fi]);
        v_out[fi] = scale * (emp - exact);
        w_out[fi] = v_out[fi];
    }

    std::vector<double> counts(space, 0.0);
    for (int n = 1; n <= spec.horizon; ++n) {
        counts.assign(space, 0.0);
        for (std::int32_t s : states) counts[static_cast<std::size_t>(s)] += 1.0;
        std::vector<double> weights(space);
        for (std::size_t x = 0; x < space; ++x)
            weights[x] = counts[x] / static_cast<double>(n_particles);
        const ProbabilityVector eta_prev(std::move(weights));
        const FiniteKernel kernel = model.mckean_kernel(eta_prev, n - 1);

        std::vector<double> predicted(f_count, 0.0);
        for (std::size_t fi = 0; fi < f_count; ++fi) {
            const BoundedFunction kf = kernel_apply(kernel, functions[fi]);
            double acc = 0.0;
            for (std::size_t x = 0; x < space; ++x) acc += eta_prev[x] * kf[x];
            predicted[fi] = acc;
        }

        const KernelSampler sampler(kernel);
        for (auto& s : states) s = sampler.sample(s, rng.next_double());
        space = kernel.target_states();

        const std::size_t base = static_cast<std::size_t>(n) * f_count;
        for (std::size_t fi = 0; fi < f_count; ++fi) {
            const double emp = empirical_of(functions[fi]);
            v_out[base + fi] = scale * (emp - integrate(flow[static_cast<std::size_t>(n)],
                                                        functions[fi]));
            w_out[base + fi] = scale * (emp - predicted[fi]);
        }
    }
}

}  // namespace

Battery::Battery(const ExperimentSpec& spec)
    : horizon_(spec.horizon), replications_(spec.replications), particles_(spec.particles) {
    if (spec.horizon < 0) throw std::invalid_argument("Battery: negative horizon");
    if (spec.replications < 1) throw std::invalid_argument("Battery: need at least 1 replication");
    if (spec.particles < 1) throw std::invalid_argument("Battery: need at least 1 particle");
    const std::size_t states = model_states(spec.model);
    if (spec.test_functions.empty()) {
        functions_ = default_test_functions(states, spec.master_seed);
        function_ids_ = default_test_function_ids(states);
    } else {
        functions_ = spec.test_functions;
        for (std::size_t i = 0; i < functions_.size(); ++i)
            function_ids_.push_back("f" + std::to_string(i));
    }
    flow_ = model_flow(spec.model, spec.horizon);

    const std::size_t slots = static_cast<std::size_t>(replications_) *
                              static_cast<std::size_t>(horizon_ + 1) * functions_.size();
    v_.assign(slots, 0.0);
    w_.assign(slots, 0.0);
    const std::size_t stride = static_cast<std::size_t>(horizon_ + 1) * functions_.size();

    std::visit(
        [&](const auto& m) {
            parallel_for(replications_, spec.threads, [&](int r) {
                double* v_slot = v_.data() + static_cast<std::size_t>(r) * stride;
                double* w_slot = w_.data() + static_cast<std::size_t>(r) * stride;
                run_replication(m, spec, flow_, functions_, r, v_slot, w_slot);
            });
        },
        spec.model);
}

double exact_w_variance(const FiniteModel& model, std::span<const ProbabilityVector> flow, int n,
                        const BoundedFunction& f) {
    if (n < 0 || static_cast<std::size_t>(n) >= flow.size())
        throw std::out_of_range("exact_w_variance: generation out of range");
    if (n == 0) {
        const double mean = integrate(flow[0], f);
        double acc = 0.0;
        for (std::size_t x = 0; x < flow[0].size(); ++x) {
            const double d = f[x] - mean;
            acc += flow[0][x] * d * d;
        }
        return acc;
    }
    const ProbabilityVector& prev = flow[static_cast<std::size_t>(n - 1)];
    const FiniteKernel kernel = std::visit(
        [&](const auto& m) { return m.mckean_kernel(prev, n - 1); }, model);
    const BoundedFunction kf = kernel_apply(kernel, f);
    double acc = 0.0;
    for (std::size_t x = 0; x < prev.size(); ++x) {
        double varx = 0.0;
        for (std::size_t y = 0; y < kernel.target_states(); ++y) {
            const double d = f[y] - kf[x];
            varx += kernel(x, y) * d * d;
        }
        acc += prev[x] * varx;
    }
    return acc;
}

double exact_clt_variance(const FeynmanKacModel& model, int n, const BoundedFunction& f) {
    const auto flow = exact_flow(model, n);
    const FkSemigroup sg(model, n);
    const FiniteModel as_variant = model;
    double total = 0.0;
    for (int p = 0; p <= n; ++p) {
        const BoundedFunction field = sg.first_order(p, f, flow[static_cast<std::size_t>(p)],
                                                     flow[static_cast<std::size_t>(n)]);
        total += exact_w_variance(as_variant, flow, p, field);
    }
    return total;
}

std::vector<ConcentrationParams> certificate_params(const ExperimentSpec& spec) {
    if (spec.params_override) {
        if (spec.params_override->size() != static_cast<std::size_t>(spec.horizon) + 1)
            throw std::invalid_argument(
                "certificate_params: params_override must cover generations 0..horizon");
        return *spec.params_override;
    }
    const auto* fk = std::get_if<FeynmanKacModel>(&spec.model);
    if (!fk)
        throw std::invalid_argument(
            "certificate_params: exceedance on non-Feynman-Kac models needs params_override");
    std::vector<ConcentrationParams> out;
    out.reserve(static_cast<std::size_t>(spec.horizon) + 1);
    for (int n = 0; n <= spec.horizon; ++n)
        out.push_back(fk_finite_horizon_tables(*fk, n).params());
    return out;
}

namespace {

double binomial_se(double p_hat, double replications) {
    return std::sqrt(p_hat * (1.0 - p_hat) / replications);
}

ExperimentReport exceedance_impl(const ExperimentSpec& spec, const Battery& battery) {
    ExperimentReport report;
    const auto params = certificate_params(spec);
    const double r_count = static_cast<double>(battery.replications());
    const double sqrt_n = std::sqrt(static_cast<double>(battery.particles()));
    for (int n = 0; n <= battery.horizon(); ++n) {
        const ConcentrationParams& p = params[static_cast<std::size_t>(n)];
        for (std::size_t fi = 0; fi < battery.functions().size(); ++fi) {
            for (double x : spec.x_grid) {
                const CertificateLevels levels = certificate_levels(p, x, battery.particles());
                const BernsteinDeviations dev = bernstein_deviations(p, x, battery.particles());
                const double thresholds[4] = {
                    levels.bennett_v,
                    levels.hoeffding_v,
                    p.r / sqrt_n + sqrt_n * dev.lambda1,
                    p.r / sqrt_n + sqrt_n * dev.lambda2,
                };
                static constexpr const char* kNames[4] = {
                    "exceedance_bennett",
                    "exceedance_hoeffding",
                    "exceedance_bernstein1",
                    "exceedance_bernstein2",
                };
                for (int e = 0; e < 4; ++e) {
                    int exceed = 0;
                    for (int r = 0; r < battery.replications(); ++r)
                        if (battery.v(r, n, static_cast<int>(fi)) > thresholds[e]) ++exceed;
                    CheckRow row;
                    row.check = kNames[e];
                    row.generation = n;
                    row.function_id = battery.function_ids()[fi];
                    row.x_or_m = x;
                    row.empirical = static_cast<double>(exceed) / r_count;
                    row.bound = std::exp(-x);
                    row.std_error = binomial_se(row.empirical, r_count);
                    row.pass = row.empirical <=
                               row.bound + spec.thresholds.exceedance_sigma * row.std_error;
                    report.add(std::move(row));
                }
            }
        }
    }
    return report;
}

ExperimentReport clt_impl(const ExperimentSpec& spec, const Battery& battery) {
    const auto* fk = std::get_if<FeynmanKacModel>(&spec.model);
    if (!fk)
        throw std::invalid_argument("clt_variance_check: needs a finite Feynman-Kac model");
    ExperimentReport report;
    std::vector<double> samples(static_cast<std::size_t>(battery.replications()));
    for (int n = 0; n <= battery.horizon(); ++n) {
        for (std::size_t fi = 0; fi < battery.functions().size(); ++fi) {
            const double exact = exact_clt_variance(*fk, n, battery.functions()[fi]);
            for (int r = 0; r < battery.replications(); ++r)
                samples[static_cast<std::size_t>(r)] = battery.v(r, n, static_cast<int>(fi));
            const Moments m = central_moments(samples);
            const double empirical = sample_variance(samples);
            CheckRow row;
            row.check = "clt_variance";
            row.generation = n;
            row.function_id = battery.function_ids()[fi];
            row.empirical = empirical;
            row.bound = exact;
            row.std_error =
                std::sqrt(std::max(0.0, m.m4 - m.m2 * m.m2) / static_cast<double>(
                                                                  battery.replications()));
            const double tol = n == 0 ? spec.thresholds.variance_ratio_tol_n0
                                      : spec.thresholds.variance_ratio_tol;
            if (exact <= 1e-14) {
                row.pass = empirical <= 1e-10;
            } else {
                row.pass = std::abs(empirical / exact - 1.0) <= tol;
            }
            report.add(std::move(row));
        }
    }
    return report;
}

ExperimentReport wfield_impl(const ExperimentSpec& spec, const Battery& battery) {
    ExperimentReport report;
    const double r_count = static_cast<double>(battery.replications());
    std::vector<double> xs(static_cast<std::size_t>(battery.replications()));
    std::vector<double> ys(static_cast<std::size_t>(battery.replications()));
    for (std::size_t fi = 0; fi < battery.functions().size(); ++fi) {
        for (int p = 0; p <= battery.horizon(); ++p) {
            for (int r = 0; r < battery.replications(); ++r)
                xs[static_cast<std::size_t>(r)] = battery.w(r, p, static_cast<int>(fi));
            const Moments mp = central_moments(xs);
            // Diagonal entry against the exact one-step conditional variance.
            CheckRow diag;
            diag.check = "wfield_diag";
            diag.generation = p;
            diag.function_id = battery.function_ids()[fi];
            diag.x_or_m = p;
            diag.empirical = sample_variance(xs);
            diag.bound = exact_w_variance(spec.model, battery.flow(), p, battery.functions()[fi]);
            diag.std_error = std::sqrt(std::max(0.0, mp.m4 - mp.m2 * mp.m2) / r_count);
            diag.pass = std::abs(diag.empirical - diag.bound) <=
                        spec.thresholds.covariance_sigma * diag.std_error + 1e-12;
            report.add(std::move(diag));
            // Cross-generation entries against zero.
            for (int q = p + 1; q <= battery.horizon(); ++q) {
                for (int r = 0; r < battery.replications(); ++r)
                    ys[static_cast<std::size_t>(r)] = battery.w(r, q, static_cast<int>(fi));
                const Moments mq = central_moments(ys);
                double cov = 0.0;
                for (int r = 0; r < battery.replications(); ++r)
                    cov += (xs[static_cast<std::size_t>(r)] - mp.mean) *
                           (ys[static_cast<std::size_t>(r)] - mq.mean);
                cov /= (r_count - 1.0);
                CheckRow cross;
                cross.check = "wfield_cross";
                cross.generation = p;
                cross.function_id = battery.function_ids()[fi];
                cross.x_or_m = q;
                cross.empirical = cov;
                cross.bound = 0.0;
                cross.std_error = std::sqrt((mp.m2 * mq.m2 + cov * cov) / r_count);
                cross.pass = std::abs(cov) <=
                             spec.thresholds.covariance_sigma * cross.std_error + 1e-12;
                report.add(std::move(cross));
            }
        }
    }
    return report;
}

ExperimentReport khintchine_impl(const ExperimentSpec& spec, const Battery& battery) {
    ExperimentReport report;
    const double r_count = static_cast<double>(battery.replications());
    for (int n = 0; n <= battery.horizon(); ++n) {
        for (std::size_t fi = 0; fi < battery.functions().size(); ++fi) {
            for (int m = 1; m <= 3; ++m) {
                double mean_2m = 0.0;
                double mean_4m = 0.0;
                for (int r = 0; r < battery.replications(); ++r) {
                    const double w = std::abs(battery.w(r, n, static_cast<int>(fi)));
                    const double pw = std::pow(w, 2.0 * m);
                    mean_2m += pw;
                    mean_4m += pw * pw;
                }
                mean_2m /= r_count;
                mean_4m /= r_count;
                CheckRow row;
                row.check = "khintchine";
                row.generation = n;
                row.function_id = battery.function_ids()[fi];
                row.x_or_m = m;
                row.empirical = mean_2m;
                row.bound = khintchine_moment_bound(m);
                row.std_error =
                    std::sqrt(std::max(0.0, mean_4m - mean_2m * mean_2m) / r_count);
                if (mean_2m <= row.bound) {
                    row.pass = true;
                } else {
                    const double rel = row.std_error / mean_2m;
                    row.pass = mean_2m <= row.bound * (1.0 + spec.thresholds.khintchine_rel_se * rel);
                }
                report.add(std::move(row));
            }
        }
    }
    return report;
}

}  // namespace

double khintchine_moment_bound(int m) {
    if (m < 1) throw std::invalid_argument("khintchine_moment_bound: m must be >= 1");
    double factorial_ratio = 1.0;  // (2m)! / m!
    for (int i = m + 1; i <= 2 * m; ++i) factorial_ratio *= static_cast<double>(i);
    return std::pow(0.5, m) * factorial_ratio;
}

ExperimentReport exceedance_experiment(const ExperimentSpec& spec, const Battery& battery) {
    return exceedance_impl(spec, battery);
}
ExperimentReport clt_variance_check(const ExperimentSpec& spec, const Battery& battery) {
    return clt_impl(spec, battery);
}
ExperimentReport wfield_covariance_check(const ExperimentSpec& spec, const Battery& battery) {
    return wfield_impl(spec, battery);
}
ExperimentReport khintchine_check(const ExperimentSpec& spec, const Battery& battery) {
    return khintchine_impl(spec, battery);
}

ExperimentReport exceedance_experiment(const ExperimentSpec& spec) {
    return exceedance_impl(spec, Battery(spec));
}
ExperimentReport clt_variance_check(const ExperimentSpec& spec) {
    return clt_impl(spec, Battery(spec));
}
ExperimentReport wfield_covariance_check(const ExperimentSpec& spec) {
    return wfield_impl(spec, Battery(spec));
}
ExperimentReport khintchine_check(const ExperimentSpec& spec) {
    return khintchine_impl(spec, Battery(spec));
}

ExperimentReport run_all_checks(const ExperimentSpec& spec) {
    const Battery battery(spec);
    ExperimentReport report;
    const bool is_fk = std::holds_alternative<FeynmanKacModel>(spec.model);
    if (is_fk || spec.params_override) report.merge(exceedance_impl(spec, battery));
    if (is_fk) report.merge(clt_impl(spec, battery));
    report.merge(wfield_impl(spec, battery));
    report.merge(khintchine_impl(spec, battery));
    return report;
}

}  // namespace mfc
