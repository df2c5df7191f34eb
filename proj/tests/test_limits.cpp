#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "corpus.hpp"
#include "freecircle/limits.hpp"
#include "test_support.hpp"

using namespace freecircle;
using freecircle::testing::case_corpus;
using freecircle::testing::constant_rule;
using freecircle::testing::one_minus_rule;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::Config;
}

const BoundReport& find(const std::vector<BoundReport>& reports, const std::string& id) {
  for (const auto& r : reports) {
    if (r.id == id) return r;
  }
  throw std::runtime_error("missing report " + id);
}

double witness(const ClassificationResult& r, const std::string& name) {
  for (const auto& [k, v] : r.witnesses) {
    if (k == name) return v;
  }
  return std::nan("");
}

}  // namespace

TEST_CASE("corpus labels") {
  for (const auto& c : case_corpus()) {
    CAPTURE(c.name);
    const auto r = classify(c.spec, 400);
    CHECK(r.label == c.label);
    CHECK(r.converges_to_uniform == c.converges);
    CHECK_FALSE(r.indeterminate);
    CHECK(std::string(to_string(r.label)) == c.name);
  }
}

TEST_CASE("classify details") {
  const auto corpus = case_corpus();
  const auto two = classify(corpus[1].spec, 10);
  CHECK(two.zero_mean_indices == std::vector<int>{1, 2});
  CHECK(witness(two, "zero_index_second") == 2.0);

  const auto iv3 = classify(corpus[6].spec, 100);
  CHECK(iv3.zero_mean_indices == std::vector<int>{1});
  CHECK(iv3.product_evidence == "tail-flag");
  // prod_{k=2}^{100} (1 - 1/k^2) = 101 / 200
  CHECK(std::abs(witness(iv3, "tail_product_at_horizon") - 101.0 / 200.0) <= 1e-12);

  const auto iii2 = classify(corpus[3].spec, 50);
  CHECK(std::abs(witness(iii2, "liminf_a") - 0.8) <= 1e-12);
  CHECK(iii2.horizon == 50);

  // rotated point masses: angles recover the phase
  const auto rot = SequenceSpec::explicit_list(
      {AtomicMeasure::bernoulli(0.9), rotate(AtomicMeasure::bernoulli(0.9), 1.0)});
  const auto r = classify(rot, 10);
  CHECK(r.horizon == 2);
  REQUIRE(r.normalization_angles.size() == 2);
  CHECK(r.normalization_angles[0] == 0.0);
  CHECK(std::abs(r.normalization_angles[1] + 1.0) <= 1e-12);
}

TEST_CASE("classify without analytic information") {
  // Finite list, product 0.107 at the horizon: favored branch.
  std::vector<CircleMeasure> list(10, AtomicMeasure::bernoulli(0.9));
  const auto r = classify(SequenceSpec::explicit_list(list), 10);
  CHECK(r.label == CaseLabel::I);
  CHECK(r.indeterminate);
  CHECK(r.product_evidence == "favored");

  // 30 factors: favored branch flips to zero below 1e-2.
  const auto r30 = classify(SequenceSpec::explicit_list(std::vector<CircleMeasure>(30, AtomicMeasure::bernoulli(0.9))), 30);
  CHECK(r30.label == CaseLabel::III_2);
  CHECK(r30.indeterminate);

  // Product drops below the zero tolerance inside the horizon.
  const auto rep = classify(SequenceSpec::explicit_list(std::vector<CircleMeasure>(200, AtomicMeasure::bernoulli(0.6))), 200);
  CHECK(rep.label == CaseLabel::III_2);
  CHECK(rep.product_evidence == "numeric");
  CHECK_FALSE(rep.indeterminate);
}

TEST_CASE("classify errors") {
  const auto spec = case_corpus()[3].spec;
  CHECK(kind_of([&] { classify(spec, 1); }) == ErrorKind::InvalidSpec);
  CHECK(kind_of([&] { classify(SequenceSpec::explicit_list({AtomicMeasure::bernoulli(0.9)}), 10); }) ==
        ErrorKind::InvalidSpec);
  CHECK(kind_of([] { SequenceSpec::explicit_list({}); }) == ErrorKind::InvalidSpec);
  // a_k = 0.8 forever cannot have a convergent tail.
  const auto wrong = SequenceSpec::bernoulli_rule(constant_rule(0.9), {}, TailBehavior::Converges);
  CHECK(kind_of([&] { classify(wrong, 20); }) == ErrorKind::InvalidSpec);
  const auto wrong2 = SequenceSpec::bernoulli_rule(one_minus_rule(0.5, 2.0), {}, TailBehavior::Diverges);
  CHECK(kind_of([&] { classify(wrong2, 20); }) == ErrorKind::InvalidSpec);
}

TEST_CASE("rule positions count the prefix") {
  const auto spec = SequenceSpec::bernoulli_rule(one_minus_rule(0.5, 2.0), {AtomicMeasure::bernoulli(0.9)},
                                                 TailBehavior::Converges);
  CHECK(std::abs(spec.measure(1).first_moment() - Complex(0.8)) <= 1e-15);
  CHECK(std::abs(spec.measure(2).first_moment() - Complex(0.75)) <= 1e-15);
  CHECK(std::abs(spec.measure(10).first_moment() - Complex(0.99)) <= 1e-15);
  CHECK(kind_of([&] { spec.measure(0); }) == ErrorKind::InvalidSpec);
  CHECK_FALSE(spec.length().has_value());
}

TEST_CASE("labels survive per-factor rotations") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> U(-kPi, kPi);
  const int H = 200;
  for (const auto& c : case_corpus()) {
    CAPTURE(c.name);
    for (int t = 0; t < 3; ++t) {
      std::vector<double> angles(H);
      for (double& x : angles) x = U(rng);
      const auto r = classify(c.spec.rotated(angles), H);
      CHECK(r.label == c.label);
      CHECK(r.converges_to_uniform == c.converges);
    }
  }
}

TEST_CASE("classifier agrees with the moment diagnostic") {
  const int n = 40;
  for (const auto& c : case_corpus()) {
    CAPTURE(c.name);
    const auto table = diagnose(c.spec, n, 4);
    REQUIRE(table.size() == static_cast<std::size_t>(n));
    const double last = table.back().max_moment;
    CAPTURE(last);
    if (c.converges) {
      CHECK(last < 0.05);
      for (std::size_t j = 3 * table.size() / 4; j + 1 < table.size(); ++j) {
        CHECK(table[j + 1].max_moment <= table[j].max_moment + 1e-12);
      }
    } else {
      CHECK(last >= 0.05);
    }
  }
}

TEST_CASE("zero-mean tail keeps the second moment") {
  // X_1 symmetric Bernoulli, then a_k = 1 - 1/k^2: E[Pi_n^2] = (prod_{k=2}^n a_k)^2.
  const auto spec = case_corpus()[6].spec;
  const auto table = diagnose(spec, 6, 2);
  std::vector<MomentVector> seq;
  for (int i = 1; i <= 6; ++i) seq.push_back(spec.measure(i).moments(2));
  const auto products = product_moments(seq, 2);
  double prod = 1.0;
  for (int n = 1; n <= 6; ++n) {
    if (n >= 2) prod *= 1.0 - 1.0 / (n * n);
    CAPTURE(n);
    CHECK(std::abs(products[static_cast<std::size_t>(n - 1)][1]) <= 1e-14);
    CHECK(std::abs(products[static_cast<std::size_t>(n - 1)][2] - prod * prod) <= 1e-12);
    CHECK(std::abs(table[static_cast<std::size_t>(n - 1)].max_moment - prod * prod) <= 1e-12);
  }
}

TEST_CASE("diagnose") {
  const auto spec = SequenceSpec::repeated(AtomicMeasure::bernoulli(0.95));
  const auto t = diagnose(spec, 25, 1);
  for (const auto& row : t) CHECK(std::abs(row.max_moment - std::pow(0.9, row.n)) <= 1e-12);
  CHECK(empirically_converging(t, 0.1));
  CHECK_FALSE(empirically_converging(t, 0.01));
  CHECK_FALSE(empirically_converging({}, 1.0));

  const auto u = diagnose(SequenceSpec::repeated(CircleMeasure::uniform()), 5, 6);
  for (const auto& row : u) CHECK(row.max_moment == 0.0);

  CHECK(kind_of([&] { diagnose(spec, 0, 1); }) == ErrorKind::InvalidSpec);
  CHECK(kind_of([&] { diagnose(spec, 3, 0); }) == ErrorKind::InvalidSpec);
}

TEST_CASE("ck estimate") {
  const auto b95 = SequenceSpec::repeated(AtomicMeasure::bernoulli(0.95));
  const auto r = check_ck_bound(b95, 60, 1);
  CHECK(r.id == "ck-estimate");
  REQUIRE(r.points.size() == 1);
  CHECK(r.points[0].lhs == doctest::Approx(1.797e-3).epsilon(1e-3));
  CHECK(r.points[0].rhs == doctest::Approx(2.41e3).epsilon(5e-3));
  CHECK(r.pass);

  const auto b995 = SequenceSpec::repeated(AtomicMeasure::bernoulli(0.995));
  const auto r2 = check_ck_bound(b995, 200, 4);
  CHECK(r2.pass);
  CHECK(r2.points.size() == 4);
  CHECK(r2.min_margin > 0.0);

  // sum alpha = 0.5 at n = 5
  CHECK(kind_of([&] { check_ck_bound(b95, 5, 2); }) == ErrorKind::NotApplicable);
  CHECK(kind_of([&] { check_ck_bound(case_corpus()[6].spec, 60, 2); }) == ErrorKind::NotApplicable);
  CHECK(kind_of([&] { check_ck_bound(b95, 0, 2); }) == ErrorKind::NotApplicable);
}

TEST_CASE("ck estimate on random sequences") {
  std::mt19937_64 rng(99);
  for (int t = 0; t < 8; ++t) {
    std::vector<CircleMeasure> seq;
    for (int i = 0; i < 30; ++i) seq.push_back(testing::random_normalized(rng, 0.7, 0.99));
    const auto r = check_ck_bound(SequenceSpec::explicit_list(seq), 30, 4);
    CHECK(r.pass);
  }
}

TEST_CASE("lemma bounds, Bernoulli") {
  const auto reports = verify_lemma_bounds(AtomicMeasure::bernoulli(0.9), {}, 8);
  CHECK(reports.size() == 9);
  for (const auto& r : reports) {
    CAPTURE(r.id);
    CHECK(r.pass);
    CHECK_FALSE(r.points.empty());
  }
  const auto& approx = verify_lemma_bounds(AtomicMeasure::bernoulli(0.9), {Complex(0.3, 0.0)}, 4);
  const auto& at = find(approx, "psi-approximation").points.at(0);
  CHECK(at.lhs == doctest::Approx(0.01978).epsilon(1e-3));
  CHECK(at.rhs == doctest::Approx(12.888).epsilon(1e-9));

  double smallest = 1e9;
  for (const auto& p : find(reports, "psi-lower-bound").points) smallest = std::min(smallest, p.rhs);
  CHECK(smallest >= 0.1067);
}

TEST_CASE("lemma bounds, point mass") {
  const auto reports = verify_lemma_bounds(AtomicMeasure::point_mass(0.0), {}, 6);
  for (const auto& id : {"theta-second-moment", "theta-first-moment", "theta-higher-moments", "expectation-bound",
                         "psi-approximation"}) {
    CAPTURE(id);
    for (const auto& p : find(reports, id).points) CHECK(p.lhs <= 1e-15);
  }
  for (const auto& r : reports) CHECK(r.pass);
}

TEST_CASE("lemma bounds on random normalized measures") {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 20; ++t) {
    const auto m = testing::random_normalized(rng, 0.2, 1.0);
    for (const auto& r : verify_lemma_bounds(m, {}, 6)) {
      CAPTURE(r.id);
      CHECK(r.pass);
    }
  }
}

TEST_CASE("lemma bounds reject unnormalized input") {
  CHECK(kind_of([] { verify_lemma_bounds(AtomicMeasure::bernoulli(0.5), {}, 4); }) == ErrorKind::NotApplicable);
  CHECK(kind_of([] { verify_lemma_bounds(AtomicMeasure::bernoulli(0.2), {}, 4); }) == ErrorKind::NotApplicable);
  CHECK(kind_of([] { verify_lemma_bounds(AtomicMeasure::point_mass(1.0), {}, 4); }) == ErrorKind::NotApplicable);
  CHECK(kind_of([] { verify_lemma_bounds(AtomicMeasure::bernoulli(0.9), {}, 0); }) == ErrorKind::NotApplicable);
}

TEST_CASE("f estimate") {
  const auto spec = SequenceSpec::repeated(AtomicMeasure::bernoulli(0.95));
  const auto r = verify_f_estimate(spec, 5, 3, {});
  CHECK(r.id == "f-estimate");
  CHECK(r.pass);
  CHECK(r.points.size() == 3 * (1 + 8 * 32));
  // z = 0: |f(0)|^k = (prod a)^k
  for (int k = 1; k <= 3; ++k) CHECK(r.points[static_cast<std::size_t>(k - 1)].lhs ==
                                     doctest::Approx(std::pow(std::pow(0.9, 5), k)).epsilon(1e-12));

  std::mt19937_64 rng(31);
  for (int t = 0; t < 5; ++t) {
    std::vector<CircleMeasure> seq;
    for (int i = 0; i < 6; ++i) seq.push_back(rotate(testing::random_normalized(rng, 0.5, 0.95), 2.0 * i));
    CHECK(verify_f_estimate(SequenceSpec::explicit_list(seq), 6, 4, {}).pass);
  }

  CHECK(kind_of([&] { verify_f_estimate(spec, 5, 3, {Complex(0.1)}); }) == ErrorKind::NotApplicable);
  CHECK(kind_of([&] { verify_f_estimate(case_corpus()[6].spec, 3, 3, {}); }) == ErrorKind::NotApplicable);
}

TEST_CASE("sum and product") {
  const auto r = sum_product_relation({0.5, 0.5, 1.0});
  CHECK(r.product == 0.25);
  CHECK(r.alpha_sum == 1.0);
  CHECK(r.bound_ok);
  CHECK(sum_product_relation({}).product == 1.0);
  CHECK(kind_of([] { sum_product_relation({0.5, 0.0}); }) == ErrorKind::Domain);
  CHECK(kind_of([] { sum_product_relation({1.5}); }) == ErrorKind::Domain);

  // prod (1 - alpha) <= exp(-sum alpha), and both sides vanish together
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> U(0.01, 1.0);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> a(20);
    for (double& x : a) x = U(rng);
    CHECK(sum_product_relation(a).bound_ok);
  }
  std::vector<double> harmonic;
  for (int k = 2; k <= 20000; ++k) harmonic.push_back(1.0 - 1.0 / k);
  const auto h = sum_product_relation(harmonic);
  CHECK(h.product == doctest::Approx(1.0 / 20000.0).epsilon(1e-9));
  CHECK(h.alpha_sum > 9.0);
}

TEST_CASE("approximation constant") {
  CHECK(std::abs(psi_approximation_constant(200) - 716.0) <= 1e-6);
  CHECK(psi_approximation_constant(1) == doctest::Approx(7.0 * (8.0 + 1.0 / 7.0)));
  CHECK(psi_approximation_constant(20) < 716.0);
}
