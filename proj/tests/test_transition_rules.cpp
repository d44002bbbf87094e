#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "psamp/errors.hpp"
#include "psamp/model_zoo.hpp"
#include "psamp/transition_rule.hpp"

using namespace psamp;

namespace {

const Rational kHalf(1, 2);

std::shared_ptr<const TableRule> toy_monotone() {
  return make_table_rule(make_ordered_state_space(3), {kHalf, kHalf},
                         {{0, 0, 1}, {1, 2, 2}});
}

}  // namespace

TEST_CASE("table rule derives its kernel from the atoms") {
  const auto rule = toy_monotone();
  CHECK(rule->atom_count() == 2);
  CHECK(rule->kernel().exact());
  CHECK(rule->kernel().exact_at(0, 0) == kHalf);
  CHECK(rule->kernel().exact_at(0, 2) == Rational(0));
  CHECK(rule->kernel().exact_at(1, 0) == kHalf);
  CHECK(rule->kernel().exact_at(1, 2) == kHalf);
  for (State z = 0; z < 3; ++z) CHECK(rule->kernel().exact_pi()[z] == Rational(1, 3));
}

TEST_CASE("table rule rejects bad weights and maps") {
  CHECK_THROWS_AS(make_table_rule(make_state_space(2), {kHalf, Rational(1, 3)},
                                  {{0, 1}, {1, 0}}),
                  BadWeights);
  CHECK_THROWS_AS(make_table_rule(make_state_space(2), {Rational(3, 2), Rational(-1, 2)},
                                  {{0, 1}, {1, 0}}),
                  BadWeights);
  CHECK_THROWS_AS(make_table_rule(make_state_space(2), {}, {}), BadWeights);
  CHECK_THROWS_AS(make_table_rule(make_state_space(2), {Rational(1)}, {{0, 5}}), Error);
  CHECK_THROWS_AS(make_table_rule(make_state_space(2), {Rational(1)}, {{0}}), Error);
}

TEST_CASE("table rule against a given kernel checks the pushforward") {
  const auto model = toy_chain();
  CHECK_NOTHROW(make_table_rule(model.kernel, {kHalf, kHalf},
                                {{0, 0, 1}, {1, 2, 2}}));
  CHECK_THROWS_AS(make_table_rule(model.kernel, {Rational(1, 4), Rational(3, 4)},
                                  {{0, 0, 1}, {1, 2, 2}}),
                  KernelMismatch);
  CHECK_THROWS_AS(make_table_rule(model.kernel, {kHalf, kHalf},
                                  {{0, 0, 0}, {1, 2, 2}}),
                  KernelMismatch);
}

TEST_CASE("table rule apply and driver validation") {
  const auto rule = toy_monotone();
  CHECK(rule->apply(0, AtomDriver{0}) == 0);
  CHECK(rule->apply(2, AtomDriver{0}) == 1);
  CHECK(rule->apply(1, AtomDriver{1}) == 2);
  CHECK_THROWS_AS(rule->apply(0, UnitDriver{0.5}), DriverMismatch);
  CHECK_THROWS_AS(rule->apply(0, AtomDriver{2}), DriverMismatch);
  CHECK_THROWS_AS(rule->apply(0, AtomDriver{-1}), DriverMismatch);
  CHECK_THROWS_AS(rule->apply(5, AtomDriver{0}), Error);
}

TEST_CASE("table rule imputation lands on consistent atoms only") {
  const auto rule = toy_monotone();
  RngStream rng(1);
  // 0 -> 0 is only reachable through atom 0, 1 -> 2 only through atom 1.
  for (int i = 0; i < 20; ++i) {
    CHECK(std::get<AtomDriver>(rule->impute_driver(0, 0, rng)).index == 0);
    CHECK(std::get<AtomDriver>(rule->impute_driver(1, 2, rng)).index == 1);
  }
  CHECK_THROWS_AS(rule->impute_driver(0, 2, rng), ImpossibleTransition);
}

TEST_CASE("imputation weights overlapping atoms by their mass") {
  // Two atoms both send 0 to 0, with weights 2/3 and 1/3.
  const auto rule = make_table_rule(make_state_space(2), {Rational(2, 3), Rational(1, 3)},
                                    {{0, 0}, {0, 1}});
  const auto cond = rule->enumerate_conditional(0, 0);
  REQUIRE(cond.size() == 2);
  CHECK(cond[0].weight == Rational(2, 3));
  CHECK(cond[1].weight == Rational(1, 3));

  RngStream rng(2);
  long hits = 0;
  const int reps = 30000;
  for (int i = 0; i < reps; ++i)
    hits += std::get<AtomDriver>(rule->impute_driver(0, 0, rng)).index == 0;
  CHECK(static_cast<double>(hits) / reps == doctest::Approx(2.0 / 3.0).epsilon(0.03));
}

TEST_CASE("table rule enumerations are exactly normalized") {
  const auto rule = toy_monotone();
  const auto atoms = rule->enumerate_drivers();
  REQUIRE(atoms.size() == 2);
  Rational sum = 0;
  for (const auto& a : atoms) sum += a.weight;
  CHECK(sum == Rational(1));

  const auto cond = rule->enumerate_conditional(2, 1);
  REQUIRE(cond.size() == 1);
  CHECK(cond[0].weight == Rational(1));
  CHECK(std::get<AtomDriver>(cond[0].driver).index == 0);
  CHECK_THROWS_AS(rule->enumerate_conditional(2, 0), ImpossibleTransition);
}

TEST_CASE("independent-transitions rule applies, samples and imputes per row") {
  const auto model = toy_chain();
  const auto& rule = *model.independent_rule;
  CHECK(rule.driver_kind() == DriverKind::DestinationTable);

  CHECK(rule.apply(1, TableDriver{{0, 2, 1}}) == 2);
  CHECK_THROWS_AS(rule.apply(1, AtomDriver{0}), DriverMismatch);
  CHECK_THROWS_AS(rule.apply(1, TableDriver{{0, 1}}), DriverMismatch);

  RngStream rng(3);
  for (int i = 0; i < 100; ++i) {
    const auto d = std::get<TableDriver>(rule.sample_driver(rng));
    REQUIRE(d.dest.size() == 3);
    for (State x = 0; x < 3; ++x) CHECK(rule.kernel().at(x, d.dest[x]) > 0.0);
  }
  for (int i = 0; i < 100; ++i) {
    const auto d = std::get<TableDriver>(rule.impute_driver(1, 2, rng));
    CHECK(d.dest[1] == 2);
    CHECK(rule.kernel().at(0, d.dest[0]) > 0.0);
    CHECK(rule.kernel().at(2, d.dest[2]) > 0.0);
  }
  CHECK_THROWS_AS(rule.impute_driver(0, 2, rng), ImpossibleTransition);
}

TEST_CASE("independent-transitions rule enumerates the product law") {
  const auto model = toy_chain();
  const auto& rule = *model.independent_rule;
  REQUIRE(rule.enumerable());

  const auto atoms = rule.enumerate_drivers();
  CHECK(atoms.size() == 8);  // two choices per state
  Rational sum = 0;
  for (const auto& a : atoms) {
    CHECK(a.weight == Rational(1, 8));
    sum += a.weight;
  }
  CHECK(sum == Rational(1));

  const auto cond = rule.enumerate_conditional(0, 1);
  CHECK(cond.size() == 4);
  Rational csum = 0;
  for (const auto& a : cond) {
    CHECK(std::get<TableDriver>(a.driver).dest[0] == 1);
    CHECK(a.weight == Rational(1, 4));
    csum += a.weight;
  }
  CHECK(csum == Rational(1));
}

TEST_CASE("independent-transitions rule respects the enumeration cap") {
  const auto model = toy_chain();
  const auto capped = make_independent_transitions_rule(model.kernel, 4);
  CHECK_FALSE(capped->enumerable());
  CHECK_THROWS_AS(capped->enumerate_drivers(), EnumerationTooLarge);
  // Sampling still works below the cap.
  RngStream rng(4);
  CHECK_NOTHROW(capped->sample_driver(rng));
}

TEST_CASE("independent-transitions rule refuses enumeration without exact entries") {
  const double a = std::sqrt(0.5);
  const std::vector<double> m = {a, 1.0 - a, 0.5, 0.5};
  const auto k = DiscreteKernel::build(make_ordered_state_space(2), m);
  const auto rule = make_independent_transitions_rule(k);
  CHECK_FALSE(rule->enumerable());
  CHECK_THROWS_AS(rule->enumerate_drivers(), IrrationalEntries);
}

TEST_CASE("inverse-CDF rule walks the row in segment order") {
  const auto model = toy_chain();
  const auto rule = make_inverse_cdf_rule(model.kernel);
  CHECK(rule->driver_kind() == DriverKind::UnitInterval);
  CHECK(rule->ordering() == std::vector<State>{0, 1, 2});

  CHECK(rule->apply(0, UnitDriver{0.0}) == 0);
  CHECK(rule->apply(0, UnitDriver{0.49}) == 0);
  CHECK(rule->apply(0, UnitDriver{0.5}) == 1);
  CHECK(rule->apply(0, UnitDriver{0.99}) == 1);
  CHECK(rule->apply(2, UnitDriver{0.1}) == 1);
  CHECK(rule->apply(2, UnitDriver{0.7}) == 2);
  CHECK_THROWS_AS(rule->apply(0, UnitDriver{1.0}), DriverMismatch);
  CHECK_THROWS_AS(rule->apply(0, UnitDriver{-0.1}), DriverMismatch);
  CHECK_THROWS_AS(rule->apply(0, AtomDriver{0}), DriverMismatch);
}

TEST_CASE("inverse-CDF imputation hits the observed segment") {
  const auto model = toy_chain();
  const auto rule = make_inverse_cdf_rule(model.kernel);
  RngStream rng(5);
  for (State x = 0; x < 3; ++x)
    for (State y = 0; y < 3; ++y) {
      if (model.kernel.at(x, y) <= 0.0) continue;
      for (int i = 0; i < 50; ++i) {
        const Driver d = rule->impute_driver(x, y, rng);
        CHECK(rule->apply(x, d) == y);
      }
    }
  CHECK_THROWS_AS(rule->impute_driver(0, 2, rng), ImpossibleTransition);
  CHECK_THROWS_AS(rule->enumerate_drivers(), EnumerationTooLarge);
}

TEST_CASE("inverse-CDF discretization reproduces the two-atom rule") {
  const auto model = toy_chain();
  const auto rule = make_inverse_cdf_rule(model.kernel);

  const auto bounds = rule->segment_boundaries();
  REQUIRE(bounds.size() == 3);
  CHECK(bounds[0] == Rational(0));
  CHECK(bounds[1] == kHalf);
  CHECK(bounds[2] == Rational(1));

  const auto table = rule->discretize();
  REQUIRE(table->atom_count() == 2);
  CHECK(table->weights()[0] == kHalf);
  CHECK(table->weights()[1] == kHalf);
  CHECK(table->maps()[0] == std::vector<State>{0, 0, 1});
  CHECK(table->maps()[1] == std::vector<State>{1, 2, 2});
}

TEST_CASE("monotonicity verdicts") {
  const auto model = toy_chain();
  CHECK(is_monotone(*model.monotone_rule).verdict == Trilean::True);
  CHECK(is_monotone(*model.independent_rule).verdict == Trilean::False);
  CHECK_FALSE(is_monotone(*model.independent_rule).detail.empty());

  // A single swap atom reverses the order.
  const auto swap = make_table_rule(make_ordered_state_space(2), {Rational(1)}, {{1, 0}});
  CHECK(is_monotone(*swap).verdict == Trilean::False);

  // No order, no verdict.
  const auto unordered = make_table_rule(make_state_space(3), {kHalf, kHalf},
                                         {{0, 0, 1}, {1, 2, 2}});
  CHECK_THROWS_AS(is_monotone(*unordered), NoOrder);
}

TEST_CASE("inverse-CDF monotonicity certificate") {
  const auto model = toy_chain();
  CHECK(is_monotone(*make_inverse_cdf_rule(model.kernel)).verdict == Trilean::True);

  // Reversed segment layout breaks the certificate's premise.
  const auto reversed = make_inverse_cdf_rule(model.kernel, std::vector<State>{2, 1, 0});
  CHECK(is_monotone(*reversed).verdict == Trilean::Unknown);

  // Rows not stochastically ordered: provably not monotone for this driver.
  const std::vector<Rational> m = {kHalf, kHalf, Rational(1), Rational(0)};
  const auto k = DiscreteKernel::build_exact(make_ordered_state_space(2), m);
  CHECK(is_monotone(*make_inverse_cdf_rule(k)).verdict == Trilean::False);
}

TEST_CASE("non-enumerable rules come back unknown") {
  const double a = std::sqrt(0.5);
  const std::vector<double> m = {a, 1.0 - a, 0.5, 0.5};
  const auto k = DiscreteKernel::build(make_ordered_state_space(2), m);
  const auto rule = make_independent_transitions_rule(k);
  CHECK(is_monotone(*rule).verdict == Trilean::Unknown);
}

TEST_CASE("impute_sequence reproduces the trajectory it was given") {
  const auto model = toy_chain();
  RngStream rng(6);
  const std::vector<State> path = {0, 1, 2, 2, 1};
  const auto seq = impute_sequence(*model.monotone_rule, path, rng);
  REQUIRE(seq.drivers.size() == 4);
  for (std::size_t s = 0; s + 1 < path.size(); ++s)
    CHECK(model.monotone_rule->apply(path[s], seq.drivers[s]) == path[s + 1]);

  const std::vector<State> impossible = {0, 2};
  CHECK_THROWS_AS(impute_sequence(*model.monotone_rule, impossible, rng),
                  ImpossibleTransition);
  CHECK_THROWS_AS(impute_sequence(*model.monotone_rule, std::vector<State>{}, rng), Error);
}
