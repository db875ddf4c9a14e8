#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mfc {

/// Probability mass tolerance used by all constructors: weight vectors whose
/// total deviates from 1 by at most this much are renormalized, anything
/// worse is rejected.
inline constexpr double kProbTol = 1e-12;

/// Exact probability measure on a finite state space {0, ..., S-1}.
/// Immutable after construction; weights are nonnegative and sum to 1.
class ProbabilityVector {
  public:
    explicit ProbabilityVector(std::vector<double> weights, std::string state_space_id = "");

    static ProbabilityVector uniform(std::size_t states, std::string state_space_id = "");
    static ProbabilityVector dirac(std::size_t states, std::size_t atom,
                                   std::string state_space_id = "");

    std::size_t size() const { return weights_.size(); }
    double operator[](std::size_t i) const { return weights_[i]; }
    const std::vector<double>& weights() const { return weights_; }
    const std::string& state_space_id() const { return space_; }

  private:
    std::vector<double> weights_;
    std::string space_;
};

/// Bounded real observable on a finite state space, one value per state.
class BoundedFunction {
  public:
    explicit BoundedFunction(std::vector<double> values);

    static BoundedFunction constant(std::size_t states, double value);
    static BoundedFunction indicator(std::size_t states, std::size_t state);

    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    const std::vector<double>& values() const { return values_; }

    double min() const;
    double max() const;
    double oscillation() const { return max() - min(); }

  private:
    std::vector<double> values_;
};

/// Markov kernel on finite spaces: a row-stochastic matrix, rows indexed by
/// source state. Rows are validated like ProbabilityVector weights.
class FiniteKernel {
  public:
    explicit FiniteKernel(std::vector<std::vector<double>> rows);

    static FiniteKernel identity(std::size_t states);
    /// Kernel whose every row equals the given distribution.
    static FiniteKernel constant(const ProbabilityVector& row, std::size_t source_states);

    std::size_t source_states() const { return rows_; }
    std::size_t target_states() const { return cols_; }
    double operator()(std::size_t from, std::size_t to) const { return p_[from * cols_ + to]; }
    std::span<const double> row(std::size_t from) const {
        return {p_.data() + from * cols_, cols_};
    }

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> p_;  // row-major
};

/// N particle states at one generation; the empirical measure is the
/// particle approximation of the flow at that generation.
struct ParticleCloud {
    std::vector<std::int32_t> states;
    int generation = 0;

    std::size_t size() const { return states.size(); }
};

// Elementary operators. All are pure functions of immutable values and throw
// std::invalid_argument on dimension mismatches.

/// Integral mu(f) = sum_x mu(x) f(x).
double integrate(const ProbabilityVector& mu, const BoundedFunction& f);

/// Empirical integral (1/N) sum_i f(state_i).
double integrate(const ParticleCloud& cloud, const BoundedFunction& f);

/// Empirical measure of a cloud over a state space of the given size.
ProbabilityVector empirical_measure(const ParticleCloud& cloud, std::size_t states);

/// Dobrushin contraction coefficient: the maximum total-variation distance
/// between two rows. Always in [0, 1]; 0 for constant kernels, 1 when two
/// rows have disjoint support.
double dobrushin(const FiniteKernel& k);

/// Kernel composition (matrix product).
FiniteKernel compose(const FiniteKernel& k1, const FiniteKernel& k2);

/// Pushforward mu K.
ProbabilityVector pushforward(const ProbabilityVector& mu, const FiniteKernel& k);

/// K(f)(x) = sum_y K(x, y) f(y).
BoundedFunction kernel_apply(const FiniteKernel& k, const BoundedFunction& f);

/// Boltzmann-Gibbs transform: reweight eta by a strictly positive potential
/// and renormalize. Throws if any potential value is <= 0.
ProbabilityVector boltzmann_gibbs(const ProbabilityVector& eta, const BoundedFunction& g);

double oscillation(const BoundedFunction& f);

}  // namespace mfc
