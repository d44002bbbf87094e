#pragma once

#include <optional>
#include <span>
#include <vector>

#include "psamp/rational.hpp"
#include "psamp/rng.hpp"
#include "psamp/state_space.hpp"

namespace psamp {

// Nonnegative weights summing to 1 within 1e-12.
struct ProbabilityVector {
  std::vector<double> w;

  static ProbabilityVector checked(std::vector<double> w, double tol = 1e-12);
  int size() const { return static_cast<int>(w.size()); }
  double operator[](int i) const { return w[static_cast<std::size_t>(i)]; }
};

struct StationaryOptions {
  int dense_cutoff = 2000;   // dense linear solve up to this size, power iteration beyond
  double tol = 1e-12;        // power-iteration convergence threshold
  long max_iterations = 1000000;
};

// Unique stationary distribution of a row-stochastic matrix. Throws
// NoUniqueStationary when the chain has two or more recurrent classes or the
// iterative path fails to converge.
std::vector<double> solve_stationary(int n, const std::vector<double>& matrix,
                                     const StationaryOptions& opts = {});

// Exact counterpart over rationals (nullspace of K^T - I; must be
// one-dimensional). Meant for the desk-scale exact layer.
std::vector<Rational> solve_stationary_exact(int n, const std::vector<Rational>& matrix);

// Row-stochastic transition matrix together with its stationary distribution.
// Carries an exact rational mirror of the matrix (and of pi) when one was
// supplied or derivable, so the enumeration layer can work without round-off.
class DiscreteKernel {
public:
  DiscreteKernel() = default;  // empty; build()/build_exact() are the real entry points

  // validate_kernel: rows must sum to 1 within 1e-12 with nonnegative
  // entries. A supplied pi is checked for stationarity (||piK - pi||_inf <=
  // 1e-9, NotStationary otherwise); with none supplied the unique stationary
  // distribution is solved for.
  static DiscreteKernel build(StateSpace space, std::vector<double> matrix,
                              std::optional<std::vector<double>> pi = {});
  // Same contract with exact entries: row sums and stationarity are checked
  // exactly, and a missing pi is solved exactly.
  static DiscreteKernel build_exact(StateSpace space, std::vector<Rational> matrix,
                                    std::optional<std::vector<Rational>> pi = {});

  int n() const { return space_.n; }
  const StateSpace& space() const { return space_; }
  double at(State x, State y) const {
    return matrix_[static_cast<std::size_t>(x) * n() + y];
  }
  std::span<const double> row(State x) const {
    return {matrix_.data() + static_cast<std::size_t>(x) * n(), static_cast<std::size_t>(n())};
  }
  const std::vector<double>& matrix() const { return matrix_; }
  const ProbabilityVector& pi() const { return pi_; }

  bool exact() const { return exact_matrix_.has_value(); }
  const std::vector<Rational>& exact_matrix() const;
  const std::vector<Rational>& exact_pi() const;
  const Rational& exact_at(State x, State y) const;

private:
  StateSpace space_;
  std::vector<double> matrix_;
  ProbabilityVector pi_;
  std::optional<std::vector<Rational>> exact_matrix_;
  std::optional<std::vector<Rational>> exact_pi_;
};

// Time reversal K~(y, x) = pi(x) K(x, y) / pi(y).
class ReversedKernel {
public:
  int n() const { return n_; }
  double at(State y, State x) const {
    return matrix_[static_cast<std::size_t>(y) * n_ + x];
  }
  std::span<const double> row(State y) const {
    return {matrix_.data() + static_cast<std::size_t>(y) * n_, static_cast<std::size_t>(n_)};
  }
  const std::vector<double>& matrix() const { return matrix_; }
  const ProbabilityVector& pi() const { return pi_; }

  bool exact() const { return exact_matrix_.has_value(); }
  const std::vector<Rational>& exact_matrix() const;

  friend ReversedKernel reverse_kernel(const DiscreteKernel& kernel, bool permissive_zero_mass);

private:
  int n_ = 0;
  std::vector<double> matrix_;
  ProbabilityVector pi_;
  std::optional<std::vector<Rational>> exact_matrix_;
};

// Throws ZeroMassState for states with pi(y) = 0 unless permissive_zero_mass
// is set, in which case those rows become uniform (any choice is harmless:
// the backward pass can never reach a zero-mass state from a positive one).
ReversedKernel reverse_kernel(const DiscreteKernel& kernel, bool permissive_zero_mass = false);

// One backward step: a draw from the reversed row at `from`.
State step_backward(const ReversedKernel& rev, State from, RngStream& rng);

}  // namespace psamp
