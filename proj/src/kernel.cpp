#include "psamp/kernel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "psamp/errors.hpp"

namespace psamp {

ProbabilityVector ProbabilityVector::checked(std::vector<double> w, double tol) {
  double sum = 0.0;
  for (double x : w) {
    if (!(x >= 0.0))
      throw Error("BadDistribution", "probability vector has a negative entry");
    sum += x;
  }
  if (std::fabs(sum - 1.0) > tol)
    throw Error("BadDistribution", "probability vector does not sum to 1");
  return ProbabilityVector{std::move(w)};
}

namespace {

std::size_t idx(int n, State x, State y) {
  return static_cast<std::size_t>(x) * n + y;
}

// Number of recurrent classes: strongly connected components (iterative
// Tarjan) of the positive-entry digraph with no outgoing edge.
int count_recurrent_classes(int n, const std::vector<double>& m) {
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<bool> on_stack(n, false);
  std::vector<int> stack, call_state, call_edge;
  int next_index = 0, comp_count = 0;

  for (int root = 0; root < n; ++root) {
    if (index[root] != -1) continue;
    call_state.push_back(root);
    call_edge.push_back(0);
    index[root] = low[root] = next_index++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!call_state.empty()) {
      const int v = call_state.back();
      int& e = call_edge.back();
      bool descended = false;
      while (e < n) {
        const int w = e++;
        if (m[idx(n, v, w)] <= 0.0) continue;
        if (index[w] == -1) {
          index[w] = low[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = true;
          call_state.push_back(w);
          call_edge.push_back(0);
          descended = true;
          break;
        }
        if (on_stack[w]) low[v] = std::min(low[v], index[w]);
      }
      if (descended) continue;
      if (low[v] == index[v]) {
        while (true) {
          const int w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp[w] = comp_count;
          if (w == v) break;
        }
        ++comp_count;
      }
      call_state.pop_back();
      call_edge.pop_back();
      if (!call_state.empty()) {
        const int parent = call_state.back();
        low[parent] = std::min(low[parent], low[v]);
      }
    }
  }

  std::vector<bool> leaks(comp_count, false);
  for (int v = 0; v < n; ++v)
    for (int w = 0; w < n; ++w)
      if (m[idx(n, v, w)] > 0.0 && comp[v] != comp[w]) leaks[comp[v]] = true;
  return static_cast<int>(std::count(leaks.begin(), leaks.end(), false));
}

void check_rows(int n, const std::vector<double>& matrix) {
  if (matrix.size() != static_cast<std::size_t>(n) * n)
    throw Error("BadArgument", "kernel matrix has wrong shape");
  for (int x = 0; x < n; ++x) {
    double sum = 0.0;
    for (int y = 0; y < n; ++y) {
      const double v = matrix[idx(n, x, y)];
      if (!(v >= 0.0) || !std::isfinite(v))
        throw NonStochasticRow("row " + std::to_string(x) + " has an invalid entry");
      sum += v;
    }
    if (std::fabs(sum - 1.0) > 1e-12)
      throw NonStochasticRow("row " + std::to_string(x) + " sums to " + std::to_string(sum));
  }
}

double stationarity_residual(int n, const std::vector<double>& matrix,
                             const std::vector<double>& pi) {
  double worst = 0.0;
  for (int y = 0; y < n; ++y) {
    double acc = 0.0;
    for (int x = 0; x < n; ++x) acc += pi[static_cast<std::size_t>(x)] * matrix[idx(n, x, y)];
    worst = std::max(worst, std::fabs(acc - pi[static_cast<std::size_t>(y)]));
  }
  return worst;
}

std::vector<double> solve_dense(int n, const std::vector<double>& matrix) {
  // (K^T - I) pi = 0 plus the normalization row, solved least-squares.
  Eigen::MatrixXd a(n + 1, n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x)
      a(y, x) = matrix[idx(n, x, y)] - (x == y ? 1.0 : 0.0);
  for (int x = 0; x < n; ++x) a(n, x) = 1.0;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n + 1);
  b(n) = 1.0;
  Eigen::VectorXd pi = a.colPivHouseholderQr().solve(b);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int x = 0; x < n; ++x) out[static_cast<std::size_t>(x)] = pi(x);
  return out;
}

std::vector<double> solve_power(int n, const std::vector<double>& matrix,
                                const StationaryOptions& opts) {
  std::vector<double> pi(static_cast<std::size_t>(n), 1.0 / n), next(static_cast<std::size_t>(n));
  for (long it = 0; it < opts.max_iterations; ++it) {
    // Damped update pi <- (pi K + pi) / 2 so periodic chains still settle.
    std::fill(next.begin(), next.end(), 0.0);
    for (int x = 0; x < n; ++x) {
      const double px = pi[static_cast<std::size_t>(x)];
      if (px == 0.0) continue;
      const double* row = matrix.data() + static_cast<std::size_t>(x) * n;
      for (int y = 0; y < n; ++y) next[static_cast<std::size_t>(y)] += px * row[y];
    }
    double delta = 0.0;
    for (int y = 0; y < n; ++y) {
      next[static_cast<std::size_t>(y)] = 0.5 * (next[static_cast<std::size_t>(y)] +
                                                 pi[static_cast<std::size_t>(y)]);
      delta = std::max(delta, std::fabs(next[static_cast<std::size_t>(y)] -
                                        pi[static_cast<std::size_t>(y)]));
    }
    pi.swap(next);
    if (delta < opts.tol) return pi;
  }
  throw NoUniqueStationary("power iteration did not converge");
}

void clean_solution(std::vector<double>& pi) {
  double sum = 0.0;
  for (double& v : pi) {
    if (std::fabs(v) < 1e-13) v = 0.0;
    if (v < 0.0)
      throw NoUniqueStationary("stationary solve produced a negative component");
    sum += v;
  }
  if (sum <= 0.0) throw NoUniqueStationary("stationary solve produced a zero vector");
  for (double& v : pi) v /= sum;
}

}  // namespace

std::vector<double> solve_stationary(int n, const std::vector<double>& matrix,
                                     const StationaryOptions& opts) {
  check_rows(n, matrix);
  if (count_recurrent_classes(n, matrix) > 1)
    throw NoUniqueStationary("kernel has two or more recurrent classes");
  std::vector<double> pi =
      n <= opts.dense_cutoff ? solve_dense(n, matrix) : solve_power(n, matrix, opts);
  clean_solution(pi);
  if (stationarity_residual(n, matrix, pi) > 1e-9)
    throw NoUniqueStationary("stationary solve failed the fixed-point check");
  return pi;
}

std::vector<Rational> solve_stationary_exact(int n, const std::vector<Rational>& matrix) {
  // Nullspace of A = K^T - I by Gauss-Jordan; must be one-dimensional.
  std::vector<Rational> a(static_cast<std::size_t>(n) * n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x)
      a[idx(n, y, x)] = matrix[idx(n, x, y)] - (x == y ? Rational(1) : Rational(0));

  std::vector<int> pivot_col_of_row;
  int row = 0;
  std::vector<bool> is_pivot_col(static_cast<std::size_t>(n), false);
  for (int col = 0; col < n && row < n; ++col) {
    int p = -1;
    for (int r = row; r < n; ++r)
      if (a[idx(n, r, col)] != 0) {
        p = r;
        break;
      }
    if (p == -1) continue;
    for (int c = 0; c < n; ++c) std::swap(a[idx(n, p, c)], a[idx(n, row, c)]);
    const Rational inv = a[idx(n, row, col)];
    for (int c = 0; c < n; ++c) a[idx(n, row, c)] /= inv;
    for (int r = 0; r < n; ++r) {
      if (r == row || a[idx(n, r, col)] == 0) continue;
      const Rational f = a[idx(n, r, col)];
      for (int c = 0; c < n; ++c) a[idx(n, r, c)] -= f * a[idx(n, row, c)];
    }
    pivot_col_of_row.push_back(col);
    is_pivot_col[static_cast<std::size_t>(col)] = true;
    ++row;
  }

  const int nullity = n - row;
  if (nullity != 1)
    throw NoUniqueStationary("stationary space has dimension " + std::to_string(nullity));

  int free_col = 0;
  while (is_pivot_col[static_cast<std::size_t>(free_col)]) ++free_col;
  std::vector<Rational> v(static_cast<std::size_t>(n), Rational(0));
  v[static_cast<std::size_t>(free_col)] = 1;
  for (int r = 0; r < row; ++r)
    v[static_cast<std::size_t>(pivot_col_of_row[static_cast<std::size_t>(r)])] =
        -a[idx(n, r, free_col)];

  Rational sum = 0;
  for (const Rational& x : v) sum += x;
  if (sum == 0) throw NoUniqueStationary("stationary solve produced a zero-sum vector");
  for (Rational& x : v) x /= sum;
  for (const Rational& x : v)
    if (x < 0) throw NoUniqueStationary("stationary solve produced a negative component");
  return v;
}

const std::vector<Rational>& DiscreteKernel::exact_matrix() const {
  if (!exact_matrix_) throw Error("NoExactForm", "kernel has no exact entries");
  return *exact_matrix_;
}

const std::vector<Rational>& DiscreteKernel::exact_pi() const {
  if (!exact_pi_) throw Error("NoExactForm", "kernel has no exact stationary law");
  return *exact_pi_;
}

const Rational& DiscreteKernel::exact_at(State x, State y) const {
  return exact_matrix()[idx(n(), x, y)];
}

DiscreteKernel DiscreteKernel::build(StateSpace space, std::vector<double> matrix,
                                     std::optional<std::vector<double>> pi) {
  space.validate();
  const int n = space.n;
  check_rows(n, matrix);

  DiscreteKernel k;
  k.space_ = std::move(space);
  k.matrix_ = std::move(matrix);
  if (pi) {
    ProbabilityVector p = ProbabilityVector::checked(std::move(*pi));
    if (p.size() != n) throw Error("BadArgument", "pi has wrong length");
    if (stationarity_residual(n, k.matrix_, p.w) > 1e-9)
      throw NotStationary("supplied pi is not stationary for the kernel");
    k.pi_ = std::move(p);
  } else {
    k.pi_ = ProbabilityVector{solve_stationary(n, k.matrix_)};
  }
  return k;
}

DiscreteKernel DiscreteKernel::build_exact(StateSpace space, std::vector<Rational> matrix,
                                           std::optional<std::vector<Rational>> pi) {
  space.validate();
  const int n = space.n;
  if (matrix.size() != static_cast<std::size_t>(n) * n)
    throw Error("BadArgument", "kernel matrix has wrong shape");
  for (int x = 0; x < n; ++x) {
    Rational sum = 0;
    for (int y = 0; y < n; ++y) {
      if (matrix[idx(n, x, y)] < 0)
        throw NonStochasticRow("row " + std::to_string(x) + " has a negative entry");
      sum += matrix[idx(n, x, y)];
    }
    if (sum != 1)
      throw NonStochasticRow("row " + std::to_string(x) + " sums to " + format_rational(sum));
  }

  std::vector<Rational> exact_pi;
  if (pi) {
    if (pi->size() != static_cast<std::size_t>(n))
      throw Error("BadArgument", "pi has wrong length");
    Rational sum = 0;
    for (const Rational& v : *pi) {
      if (v < 0) throw Error("BadDistribution", "pi has a negative entry");
      sum += v;
    }
    if (sum != 1) throw Error("BadDistribution", "pi does not sum to 1");
    for (int y = 0; y < n; ++y) {
      Rational acc = 0;
      for (int x = 0; x < n; ++x) acc += (*pi)[static_cast<std::size_t>(x)] * matrix[idx(n, x, y)];
      if (acc != (*pi)[static_cast<std::size_t>(y)])
        throw NotStationary("supplied pi is not stationary for the kernel");
    }
    exact_pi = std::move(*pi);
  } else {
    exact_pi = solve_stationary_exact(n, matrix);
  }

  DiscreteKernel k;
  k.space_ = std::move(space);
  k.matrix_.resize(static_cast<std::size_t>(n) * n);
  for (std::size_t i = 0; i < k.matrix_.size(); ++i)
    k.matrix_[i] = rational_to_double(matrix[i]);
  std::vector<double> pid(static_cast<std::size_t>(n));
  for (int x = 0; x < n; ++x) pid[static_cast<std::size_t>(x)] = rational_to_double(exact_pi[static_cast<std::size_t>(x)]);
  k.pi_ = ProbabilityVector{std::move(pid)};
  k.exact_matrix_ = std::move(matrix);
  k.exact_pi_ = std::move(exact_pi);
  return k;
}

const std::vector<Rational>& ReversedKernel::exact_matrix() const {
  if (!exact_matrix_) throw Error("NoExactForm", "reversed kernel has no exact entries");
  return *exact_matrix_;
}

ReversedKernel reverse_kernel(const DiscreteKernel& kernel, bool permissive_zero_mass) {
  const int n = kernel.n();
  ReversedKernel rev;
  rev.n_ = n;
  rev.pi_ = kernel.pi();
  rev.matrix_.assign(static_cast<std::size_t>(n) * n, 0.0);

  for (int y = 0; y < n; ++y) {
    const double py = kernel.pi()[y];
    if (py <= 0.0) {
      if (!permissive_zero_mass)
        throw ZeroMassState("state " + std::to_string(y) + " has zero stationary mass");
      // Unreachable from positive-mass states; any stochastic row will do.
      for (int x = 0; x < n; ++x) rev.matrix_[idx(n, y, x)] = 1.0 / n;
      continue;
    }
    for (int x = 0; x < n; ++x)
      rev.matrix_[idx(n, y, x)] = kernel.pi()[x] * kernel.at(x, y) / py;
  }

  if (kernel.exact()) {
    std::vector<Rational> em(static_cast<std::size_t>(n) * n, Rational(0));
    const auto& K = kernel.exact_matrix();
    const auto& pi = kernel.exact_pi();
    for (int y = 0; y < n; ++y) {
      if (pi[static_cast<std::size_t>(y)] == 0) {
        for (int x = 0; x < n; ++x) em[idx(n, y, x)] = Rational(1, n);
        continue;
      }
      for (int x = 0; x < n; ++x)
        em[idx(n, y, x)] =
            pi[static_cast<std::size_t>(x)] * K[idx(n, x, y)] / pi[static_cast<std::size_t>(y)];
    }
    rev.exact_matrix_ = std::move(em);
  }
  return rev;
}

State step_backward(const ReversedKernel& rev, State from, RngStream& rng) {
  if (from < 0 || from >= rev.n()) throw Error("BadArgument", "state out of range");
  return static_cast<State>(rng.sample_index(rev.row(from)));
}

}  // namespace psamp
