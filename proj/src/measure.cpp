#include "mfc/measure.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace mfc {

namespace {

void validate_and_normalize(std::vector<double>& w, const char* what) {
    if (w.empty()) throw std::invalid_argument(std::string(what) + ": empty weight vector");
    double total = 0.0;
    for (double v : w) {
        if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + ": non-finite weight");
        if (v < 0.0) throw std::invalid_argument(std::string(what) + ": negative weight");
        total += v;
    }
    if (std::abs(total - 1.0) > kProbTol)
        throw std::invalid_argument(std::string(what) + ": weights sum to " + std::to_string(total) +
                                    ", expected 1");
    if (total != 1.0) {
        for (double& v : w) v /= total;
    }
}

}  // namespace

ProbabilityVector::ProbabilityVector(std::vector<double> weights, std::string state_space_id)
    : weights_(std::move(weights)), space_(std::move(state_space_id)) {
    validate_and_normalize(weights_, "ProbabilityVector");
}

ProbabilityVector ProbabilityVector::uniform(std::size_t states, std::string state_space_id) {
    if (states == 0) throw std::invalid_argument("ProbabilityVector::uniform: no states");
    return ProbabilityVector(std::vector<double>(states, 1.0 / static_cast<double>(states)),
                             std::move(state_space_id));
}

ProbabilityVector ProbabilityVector::dirac(std::size_t states, std::size_t atom,
                                           std::string state_space_id) {
    if (atom >= states) throw std::invalid_argument("ProbabilityVector::dirac: atom out of range");
    std::vector<double> w(states, 0.0);
    w[atom] = 1.0;
    return ProbabilityVector(std::move(w), std::move(state_space_id));
}

BoundedFunction::BoundedFunction(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw std::invalid_argument("BoundedFunction: empty value vector");
    for (double v : values_)
        if (!std::isfinite(v)) throw std::invalid_argument("BoundedFunction: non-finite value");
}

BoundedFunction BoundedFunction::constant(std::size_t states, double value) {
    return BoundedFunction(std::vector<double>(states, value));
}

BoundedFunction BoundedFunction::indicator(std::size_t states, std::size_t state) {
    if (state >= states) throw std::invalid_argument("BoundedFunction::indicator: state out of range");
    std::vector<double> v(states, 0.0);
    v[state] = 1.0;
    return BoundedFunction(std::move(v));
}

double BoundedFunction::min() const { return *std::min_element(values_.begin(), values_.end()); }
double BoundedFunction::max() const { return *std::max_element(values_.begin(), values_.end()); }

FiniteKernel::FiniteKernel(std::vector<std::vector<double>> rows) {
    if (rows.empty()) throw std::invalid_argument("FiniteKernel: no rows");
    rows_ = rows.size();
    cols_ = rows.front().size();
    p_.reserve(rows_ * cols_);
    for (auto& row : rows) {
        if (row.size() != cols_) throw std::invalid_argument("FiniteKernel: ragged rows");
        validate_and_normalize(row, "FiniteKernel row");
        p_.insert(p_.end(), row.begin(), row.end());
    }
}

FiniteKernel FiniteKernel::identity(std::size_t states) {
    std::vector<std::vector<double>> rows(states, std::vector<double>(states, 0.0));
    for (std::size_t i = 0; i < states; ++i) rows[i][i] = 1.0;
    return FiniteKernel(std::move(rows));
}

FiniteKernel FiniteKernel::constant(const ProbabilityVector& row, std::size_t source_states) {
    std::vector<std::vector<double>> rows(source_states, row.weights());
    return FiniteKernel(std::move(rows));
}

double integrate(const ProbabilityVector& mu, const BoundedFunction& f) {
    if (mu.size() != f.size())
        throw std::invalid_argument("integrate: measure and function dimensions differ");
    double acc = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) acc += mu[i] * f[i];
    return acc;
}

double integrate(const ParticleCloud& cloud, const BoundedFunction& f) {
    if (cloud.states.empty()) throw std::invalid_argument("integrate: empty cloud");
    double acc = 0.0;
    for (std::int32_t s : cloud.states) {
        if (s < 0 || static_cast<std::size_t>(s) >= f.size())
            throw std::invalid_argument("integrate: particle state out of function range");
        acc += f[static_cast<std::size_t>(s)];
    }
    return acc / static_cast<double>(cloud.states.size());
}

ProbabilityVector empirical_measure(const ParticleCloud& cloud, std::size_t states) {
    if (cloud.states.empty()) throw std::invalid_argument("empirical_measure: empty cloud");
    std::vector<double> w(states, 0.0);
    const double unit = 1.0 / static_cast<double>(cloud.states.size());
    for (std::int32_t s : cloud.states) {
        if (s < 0 || static_cast<std::size_t>(s) >= states)
            throw std::invalid_argument("empirical_measure: state out of range");
        w[static_cast<std::size_t>(s)] += unit;
    }
    return ProbabilityVector(std::move(w));
}

double dobrushin(const FiniteKernel& k) {
    double worst = 0.0;
    for (std::size_t x = 0; x + 1 < k.source_states(); ++x) {
        for (std::size_t y = x + 1; y < k.source_states(); ++y) {
            double tv = 0.0;
            for (std::size_t z = 0; z < k.target_states(); ++z)
                tv += std::abs(k(x, z) - k(y, z));
            worst = std::max(worst, 0.5 * tv);
        }
    }
    return std::min(worst, 1.0);
}

FiniteKernel compose(const FiniteKernel& k1, const FiniteKernel& k2) {
    if (k1.target_states() != k2.source_states())
        throw std::invalid_argument("compose: inner dimensions differ");
    std::vector<std::vector<double>> rows(k1.source_states(),
                                          std::vector<double>(k2.target_states(), 0.0));
    for (std::size_t x = 0; x < k1.source_states(); ++x)
        for (std::size_t y = 0; y < k1.target_states(); ++y) {
            const double w = k1(x, y);
            if (w == 0.0) continue;
            for (std::size_t z = 0; z < k2.target_states(); ++z) rows[x][z] += w * k2(y, z);
        }
    return FiniteKernel(std::move(rows));
}

ProbabilityVector pushforward(const ProbabilityVector& mu, const FiniteKernel& k) {
    if (mu.size() != k.source_states())
        throw std::invalid_argument("pushforward: measure and kernel dimensions differ");
    std::vector<double> w(k.target_states(), 0.0);
    for (std::size_t x = 0; x < mu.size(); ++x) {
        const double m = mu[x];
        if (m == 0.0) continue;
        for (std::size_t z = 0; z < k.target_states(); ++z) w[z] += m * k(x, z);
    }
    return ProbabilityVector(std::move(w));
}

BoundedFunction kernel_apply(const FiniteKernel& k, const BoundedFunction& f) {
    if (f.size() != k.target_states())
        throw std::invalid_argument("kernel_apply: function and kernel dimensions differ");
    std::vector<double> v(k.source_states(), 0.0);
    for (std::size_t x = 0; x < k.source_states(); ++x) {
        double acc = 0.0;
        for (std::size_t z = 0; z < k.target_states(); ++z) acc += k(x, z) * f[z];
        v[x] = acc;
    }
    return BoundedFunction(std::move(v));
}

ProbabilityVector boltzmann_gibbs(const ProbabilityVector& eta, const BoundedFunction& g) {
    if (eta.size() != g.size())
        throw std::invalid_argument("boltzmann_gibbs: measure and potential dimensions differ");
    for (std::size_t i = 0; i < g.size(); ++i)
        if (!(g[i] > 0.0)) throw std::invalid_argument("boltzmann_gibbs: potential must be positive");
    double norm = 0.0;
    for (std::size_t i = 0; i < eta.size(); ++i) norm += eta[i] * g[i];
    std::vector<double> w(eta.size());
    for (std::size_t i = 0; i < eta.size(); ++i) w[i] = eta[i] * g[i] / norm;
    return ProbabilityVector(std::move(w), eta.state_space_id());
}

double oscillation(const BoundedFunction& f) { return f.oscillation(); }

}  // namespace mfc
