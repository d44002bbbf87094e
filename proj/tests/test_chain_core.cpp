#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "psamp/errors.hpp"
#include "psamp/kernel.hpp"
#include "psamp/rational.hpp"
#include "psamp/rng.hpp"
#include "psamp/state_space.hpp"

using namespace psamp;

namespace {

std::vector<double> toy_matrix() {
  return {0.5, 0.5, 0.0, 0.5, 0.0, 0.5, 0.0, 0.5, 0.5};
}

std::vector<Rational> toy_matrix_exact() {
  const Rational h(1, 2);
  return {h, h, 0, h, 0, h, 0, h, h};
}

}  // namespace

TEST_CASE("rational formatting and parsing round-trip") {
  CHECK(format_rational(Rational(1, 2)) == "1/2");
  CHECK(format_rational(Rational(-3, 7)) == "-3/7");
  CHECK(format_rational(Rational(5)) == "5");
  CHECK(format_rational(Rational(0)) == "0");

  CHECK(parse_rational("1/2") == Rational(1, 2));
  CHECK(parse_rational("3/12") == Rational(1, 4));
  CHECK(parse_rational("-2/4") == Rational(-1, 2));
  CHECK(parse_rational("+7") == Rational(7));
  CHECK(parse_rational(" 0.25 ") == Rational(1, 4));
  CHECK(parse_rational("0.1") == Rational(1, 10));
  CHECK(parse_rational(".5") == Rational(1, 2));
  CHECK(parse_rational("5.") == Rational(5));

  CHECK_THROWS_AS(parse_rational(""), Error);
  CHECK_THROWS_AS(parse_rational("1e-3"), Error);
  CHECK_THROWS_AS(parse_rational("1/0"), Error);
  CHECK_THROWS_AS(parse_rational("a/b"), Error);
  CHECK_THROWS_AS(parse_rational("1/2/3"), Error);
}

TEST_CASE("exactify recovers dyadics and small fractions, refuses the rest") {
  CHECK(exactify(0.5) == Rational(1, 2));
  CHECK(exactify(0.0) == Rational(0));
  CHECK(exactify(1.0) == Rational(1));
  CHECK(exactify(-0.25) == Rational(-1, 4));
  CHECK(exactify(1.0 / 3.0) == Rational(1, 3));
  CHECK(exactify(1.0 / 7.0) == Rational(1, 7));
  CHECK(exactify(0.1) == Rational(1, 10));

  // sqrt(1/2) has no small-denominator representation within 1e-15.
  CHECK_FALSE(exactify(std::sqrt(0.5)).has_value());
  CHECK_FALSE(exactify(std::acos(-1.0) / 4.0).has_value());
  // Denominator cap: 1/1000003 is fine by default but not under a small cap.
  CHECK(exactify(1.0 / 8.0, 8) == Rational(1, 8));
  CHECK_FALSE(exactify(1.0 / 11.0, 8).has_value());

  auto all = exactify_all({0.5, 0.25, 0.25});
  REQUIRE(all.has_value());
  CHECK((*all)[1] == Rational(1, 4));
  CHECK_FALSE(exactify_all({0.5, std::sqrt(0.5)}).has_value());
}

TEST_CASE("rational_to_double is exact on representable values") {
  CHECK(rational_to_double(Rational(1, 2)) == 0.5);
  CHECK(rational_to_double(Rational(3, 4)) == 0.75);
  CHECK(rational_to_double(Rational(1, 3)) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("seed derivation separates streams deterministically") {
  CHECK(derive_seed(42, 0) == derive_seed(42, 0));
  CHECK(derive_seed(42, 0) != derive_seed(42, 1));
  CHECK(derive_seed(42, 0) != derive_seed(43, 0));
  CHECK(mix64(0) != 0);

  RngStream a(42, 3), b(42, 3), c(42, 4);
  bool all_equal = true;
  bool any_diff_c = false;
  for (int i = 0; i < 100; ++i) {
    const std::uint64_t va = a.next_u64();
    all_equal = all_equal && va == b.next_u64();
    any_diff_c = any_diff_c || va != c.next_u64();
  }
  CHECK(all_equal);
  CHECK(any_diff_c);
}

TEST_CASE("unit draws stay in [0,1) and next_below covers its range") {
  RngStream rng(7);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.next_unit();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  CHECK(rng.next_below(1) == 0);
  std::set<int> seen;
  for (int i = 0; i < 1000; ++i) {
    const int v = rng.next_below(6);
    CHECK(v >= 0);
    CHECK(v < 6);
    seen.insert(v);
  }
  CHECK(seen.size() == 6);
  CHECK_THROWS_AS(rng.next_below(0), Error);
}

TEST_CASE("sample_index follows the weights") {
  RngStream rng(11);
  const std::vector<double> point = {0.0, 0.0, 1.0};
  for (int i = 0; i < 50; ++i) CHECK(rng.sample_index(point) == 2);

  const std::vector<double> w = {0.25, 0.75};
  long ones = 0;
  const int reps = 20000;
  for (int i = 0; i < reps; ++i) ones += rng.sample_index(w);
  const double freq = static_cast<double>(ones) / reps;
  CHECK(freq == doctest::Approx(0.75).epsilon(0.05));

  const std::vector<double> zeros = {0.0, 0.0};
  CHECK_THROWS_AS(rng.sample_index(zeros), Error);
}

TEST_CASE("linear order has the expected structure") {
  const PartialOrder order = PartialOrder::linear(4);
  CHECK(order.le(0, 3));
  CHECK(order.le(2, 2));
  CHECK_FALSE(order.le(3, 0));
  CHECK(order.is_linear());
  CHECK(order.bottom() == State(0));
  CHECK(order.top() == State(3));
}

TEST_CASE("from_pairs closes transitively and finds extremes") {
  // Diamond: 0 below 1 and 2, both below 3.
  const PartialOrder d = PartialOrder::from_pairs(4, {{0, 1}, {0, 2}, {1, 3}, {2, 3}});
  CHECK(d.le(0, 3));
  CHECK_FALSE(d.comparable(1, 2));
  CHECK_FALSE(d.is_linear());
  CHECK(d.bottom() == State(0));
  CHECK(d.top() == State(3));

  // No global extremes.
  const PartialOrder v = PartialOrder::from_pairs(3, {{0, 2}, {1, 2}});
  CHECK_FALSE(v.bottom().has_value());
  CHECK(v.top() == State(2));

  CHECK_THROWS_AS(PartialOrder::from_pairs(2, {{0, 1}, {1, 0}}), Error);
  CHECK_THROWS_AS(PartialOrder::from_pairs(2, {{0, 5}}), Error);
}

TEST_CASE("state space validation") {
  StateSpace s = make_ordered_state_space(3);
  CHECK(s.n == 3);
  CHECK(s.order.has_value());
  CHECK(s.label(1) == "1");
  s.labels = {"a", "b", "c"};
  CHECK(s.label(1) == "b");
  s.labels = {"a"};
  CHECK_THROWS_AS(s.validate(), Error);
  StateSpace empty;
  CHECK_THROWS_AS(empty.validate(), Error);
}

TEST_CASE("probability vector checking") {
  CHECK_NOTHROW(ProbabilityVector::checked({0.5, 0.5}));
  CHECK_NOTHROW(ProbabilityVector::checked({1.0}));
  CHECK_THROWS_AS(ProbabilityVector::checked({0.6, 0.6}), Error);
  CHECK_THROWS_AS(ProbabilityVector::checked({-0.1, 1.1}), Error);
}

TEST_CASE("kernel build solves the stationary law when none is given") {
  const DiscreteKernel k = DiscreteKernel::build(make_state_space(3), toy_matrix());
  for (State x = 0; x < 3; ++x) CHECK(k.pi()[x] == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
  CHECK_FALSE(k.exact());
  CHECK(k.at(0, 1) == 0.5);
  CHECK(k.row(1).size() == 3);
}

TEST_CASE("kernel build validates rows and a supplied pi") {
  std::vector<double> bad = toy_matrix();
  bad[0] = 0.6;
  CHECK_THROWS_AS(DiscreteKernel::build(make_state_space(3), bad), NonStochasticRow);
  CHECK_THROWS_AS(
      DiscreteKernel::build(make_state_space(3), toy_matrix(),
                            std::vector<double>{0.5, 0.3, 0.2}),
      NotStationary);
  CHECK_NOTHROW(DiscreteKernel::build(make_state_space(3), toy_matrix(),
                                      std::vector<double>{1.0 / 3, 1.0 / 3, 1.0 / 3}));
}

TEST_CASE("build_exact keeps rational entries and solves pi exactly") {
  const DiscreteKernel k = DiscreteKernel::build_exact(make_state_space(3), toy_matrix_exact());
  CHECK(k.exact());
  CHECK(k.exact_at(0, 1) == Rational(1, 2));
  for (State x = 0; x < 3; ++x) CHECK(k.exact_pi()[x] == Rational(1, 3));

  auto with_pi = DiscreteKernel::build_exact(
      make_state_space(3), toy_matrix_exact(),
      std::vector<Rational>{Rational(1, 3), Rational(1, 3), Rational(1, 3)});
  CHECK(with_pi.exact_pi()[0] == Rational(1, 3));
  CHECK_THROWS_AS(
      DiscreteKernel::build_exact(
          make_state_space(3), toy_matrix_exact(),
          std::vector<Rational>{Rational(1, 2), Rational(1, 4), Rational(1, 4)}),
      NotStationary);

  std::vector<Rational> bad = toy_matrix_exact();
  bad[0] = Rational(2, 3);
  CHECK_THROWS_AS(DiscreteKernel::build_exact(make_state_space(3), bad), NonStochasticRow);
}

TEST_CASE("reducible chains are rejected") {
  const std::vector<double> identity = {1.0, 0.0, 0.0, 1.0};
  CHECK_THROWS_AS(DiscreteKernel::build(make_state_space(2), identity), NoUniqueStationary);
  CHECK_THROWS_AS(solve_stationary(2, identity), NoUniqueStationary);
  const std::vector<Rational> eye = {1, 0, 0, 1};
  CHECK_THROWS_AS(solve_stationary_exact(2, eye), NoUniqueStationary);
}

TEST_CASE("transient states get zero stationary mass") {
  // State 1 feeds into the absorbing state 0.
  const std::vector<double> m = {1.0, 0.0, 1.0, 0.0};
  const DiscreteKernel k = DiscreteKernel::build(make_state_space(2), m);
  CHECK(k.pi()[0] == doctest::Approx(1.0));
  CHECK(k.pi()[1] == doctest::Approx(0.0));

  const std::vector<Rational> me = {1, 0, 1, 0};
  const auto pi = solve_stationary_exact(2, me);
  CHECK(pi[0] == Rational(1));
  CHECK(pi[1] == Rational(0));
}

TEST_CASE("power iteration path agrees with the dense solver") {
  const std::vector<double> m = {0.0, 1.0, 0.5, 0.5};
  StationaryOptions force_power;
  force_power.dense_cutoff = 1;
  const auto via_power = solve_stationary(2, m, force_power);
  const auto via_dense = solve_stationary(2, m);
  CHECK(via_power[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
  CHECK(via_power[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
  CHECK(via_dense[0] == doctest::Approx(via_power[0]).epsilon(1e-9));
}

TEST_CASE("reversal satisfies the detailed flow identity") {
  const DiscreteKernel k = DiscreteKernel::build_exact(make_state_space(3), toy_matrix_exact());
  const ReversedKernel rev = reverse_kernel(k);
  REQUIRE(rev.exact());
  // pi(x) K(x,y) == pi(y) Krev(y,x), checked exactly.
  for (State x = 0; x < 3; ++x)
    for (State y = 0; y < 3; ++y)
      CHECK(k.exact_pi()[x] * k.exact_at(x, y) ==
            k.exact_pi()[y] * rev.exact_matrix()[static_cast<std::size_t>(y) * 3 + x]);

  // The toy kernel is symmetric, so it is its own reversal.
  for (std::size_t i = 0; i < 9; ++i)
    CHECK(rev.matrix()[i] == doctest::Approx(toy_matrix()[i]).epsilon(1e-14));

  // An asymmetric chain: verify numerically.
  const std::vector<double> m = {0.0, 1.0, 0.5, 0.5};
  const DiscreteKernel k2 = DiscreteKernel::build(make_state_space(2), m);
  const ReversedKernel r2 = reverse_kernel(k2);
  for (State x = 0; x < 2; ++x)
    for (State y = 0; y < 2; ++y)
      CHECK(k2.pi()[x] * k2.at(x, y) ==
            doctest::Approx(k2.pi()[y] * r2.at(y, x)).epsilon(1e-12));
}

TEST_CASE("reversal of a chain with zero-mass states") {
  const std::vector<double> m = {1.0, 0.0, 1.0, 0.0};
  const DiscreteKernel k = DiscreteKernel::build(make_state_space(2), m);
  CHECK_THROWS_AS(reverse_kernel(k), ZeroMassState);
  const ReversedKernel rev = reverse_kernel(k, true);
  CHECK(rev.at(1, 0) == doctest::Approx(0.5));
  CHECK(rev.at(1, 1) == doctest::Approx(0.5));
  CHECK(rev.at(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("step_backward draws from the reversed row") {
  const DiscreteKernel k = DiscreteKernel::build(make_state_space(3), toy_matrix());
  const ReversedKernel rev = reverse_kernel(k);
  RngStream rng(5);
  for (int i = 0; i < 200; ++i) {
    const State prev = step_backward(rev, 0, rng);
    // Row 0 of the reversal only reaches {0, 1}.
    CHECK(prev <= 1);
  }
  CHECK_THROWS_AS(step_backward(rev, 7, rng), Error);
}
