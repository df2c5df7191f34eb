#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "freecircle/error.hpp"
#include "freecircle/rmtsim.hpp"

using namespace freecircle;

namespace {

double unitarity_error(const Eigen::MatrixXcd& U) {
  const auto n = U.rows();
  return (U.adjoint() * U - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff();
}

SimConfig bernoulli_pair(int N, int trials, std::uint64_t seed) {
  SimConfig cfg;
  cfg.N = N;
  cfg.trials = trials;
  cfg.seed = seed;
  cfg.K = 4;
  cfg.factors = {AtomicMeasure::bernoulli(0.9), AtomicMeasure::bernoulli(0.8)};
  return cfg;
}

}  // namespace

TEST_CASE("haar unitaries are unitary") {
  Rng rng(1);
  for (int N = 1; N <= 12; ++N) CHECK(unitarity_error(haar_unitary(N, rng)) <= 1e-13);
  CHECK(unitarity_error(haar_unitary(200, rng)) <= 1e-12);
  CHECK_THROWS_AS(haar_unitary(0, rng), Error);
}

TEST_CASE("haar statistics") {
  // E tr U = 0, E |tr U|^2 = 1 and E |U_00|^2 = 1/N. Without the phase fix
  // the trace statistics come out wrong.
  Rng rng(77);
  const int N = 5;
  const int samples = 6000;
  Complex tr_sum = 0.0;
  double tr2 = 0.0;
  double u00 = 0.0;
  for (int s = 0; s < samples; ++s) {
    const Eigen::MatrixXcd U = haar_unitary(N, rng);
    const Complex t = U.trace();
    tr_sum += t;
    tr2 += std::norm(t);
    u00 += std::norm(U(0, 0));
  }
  CHECK(std::abs(tr_sum / double(samples)) < 0.05);
  CHECK(std::abs(tr2 / samples - 1.0) < 0.1);
  CHECK(std::abs(u00 / samples - 1.0 / N) < 0.02);
}

TEST_CASE("sample_factor") {
  Rng rng(3);
  const int N = 16;
  const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(N, N);
  CHECK((sample_factor(AtomicMeasure::point_mass(0.0), N, rng) - I).cwiseAbs().maxCoeff() <= 1e-13);
  const Complex phase = std::polar(1.0, 0.7);
  CHECK((sample_factor(AtomicMeasure::point_mass(0.7), N, rng) - phase * I).cwiseAbs().maxCoeff() <= 1e-13);

  // Bernoulli factors are Hermitian involutions with integer traces.
  const Eigen::MatrixXcd B = sample_factor(AtomicMeasure::bernoulli(0.5), N, rng);
  CHECK((B - B.adjoint()).cwiseAbs().maxCoeff() <= 1e-13);
  CHECK((B * B - I).cwiseAbs().maxCoeff() <= 1e-12);
  const Complex t = B.trace();
  CHECK(std::abs(t.imag()) <= 1e-12);
  CHECK(std::abs(t.real() - std::round(t.real())) <= 1e-12);
  CHECK(static_cast<long>(std::round(t.real())) % 2 == N % 2);
}

TEST_CASE("stream seeds") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t t = 0; t < 20; ++t) {
    for (std::uint64_t f = 0; f < 5; ++f) seen.insert(stream_seed(9, t, f));
  }
  CHECK(seen.size() == 100);
  CHECK(stream_seed(1, 0, 0) != stream_seed(2, 0, 0));
  CHECK(stream_seed(1, 2, 3) == stream_seed(1, 2, 3));
}

TEST_CASE("simulation matches the free prediction") {
  const auto r = simulate_product(bernoulli_pair(96, 12, 5));
  REQUIRE(r.empirical_moments.size() == 5);
  CHECK(r.empirical_moments[0] == Complex(1.0));
  CHECK(std::abs(r.predicted_moments[1] - Complex(0.8 * 0.6)) <= 1e-14);
  for (int k = 1; k <= 4; ++k) {
    CAPTURE(k);
    const double err = std::abs(r.empirical_moments[k] - r.predicted_moments[k]);
    CHECK(err <= 5.0 * r.standard_errors[k] + 0.03);
  }
  CHECK(r.max_unitarity_error <= 1e-12);
  CHECK(r.eigenangles.size() == 96u * 12u);
  for (const auto& a : r.eigenangles) {
    CHECK(a.angle >= -kPi);
    CHECK(a.angle < kPi);
  }
}

TEST_CASE("simulation is deterministic") {
  auto cfg = bernoulli_pair(24, 3, 42);
  const auto a = simulate_product(cfg);
  const auto b = simulate_product(cfg);
  for (int k = 0; k <= 4; ++k) CHECK(a.empirical_moments[k] == b.empirical_moments[k]);
  REQUIRE(a.eigenangles.size() == b.eigenangles.size());
  for (std::size_t i = 0; i < a.eigenangles.size(); ++i) CHECK(a.eigenangles[i].angle == b.eigenangles[i].angle);

  cfg.seed = 43;
  CHECK(simulate_product(cfg).empirical_moments[1] != a.empirical_moments[1]);

  cfg.seed = 42;
  cfg.collect_angles = false;
  const auto c = simulate_product(cfg);
  CHECK(c.eigenangles.empty());
  for (int k = 0; k <= 4; ++k) CHECK(c.empirical_moments[k] == a.empirical_moments[k]);
}

TEST_CASE("point masses give a deterministic product") {
  SimConfig cfg;
  cfg.N = 8;
  cfg.trials = 2;
  cfg.K = 3;
  cfg.factors = {AtomicMeasure::point_mass(0.5), AtomicMeasure::point_mass(-0.2)};
  const auto r = simulate_product(cfg);
  for (int k = 1; k <= 3; ++k) {
    CHECK(std::abs(r.empirical_moments[k] - std::polar(1.0, 0.3 * k)) <= 1e-12);
    CHECK(r.standard_errors[k] <= 1e-12);
  }
}

TEST_CASE("simulation config errors") {
  auto kind = [](const SimConfig& cfg) {
    try {
      simulate_product(cfg);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::OrderMismatch;
  };
  auto cfg = bernoulli_pair(8, 1, 0);
  auto bad = cfg;
  bad.N = 1;
  CHECK(kind(bad) == ErrorKind::Config);
  bad = cfg;
  bad.trials = 0;
  CHECK(kind(bad) == ErrorKind::Config);
  bad = cfg;
  bad.K = 0;
  CHECK(kind(bad) == ErrorKind::Config);
  bad = cfg;
  bad.factors.clear();
  CHECK(kind(bad) == ErrorKind::Config);

  bad = cfg;
  bad.N = 10000;
  CHECK(estimated_flops(bad) == 1e12 * 2);
  CHECK(kind(bad) == ErrorKind::Budget);
  try {
    simulate_product(bad);
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("2000000000000") != std::string::npos);
  }
  bad.flop_budget = 1e6;
  bad.N = 200;
  CHECK(kind(bad) == ErrorKind::Budget);
}

TEST_CASE("histogram") {
  std::vector<double> angles;
  for (int j = 0; j < 64; ++j) angles.push_back(-kPi + 2.0 * kPi * (j + 0.5) / 64);
  const auto h = empirical_density(angles, 16);
  REQUIRE(h.size() == 16);
  double total = 0.0;
  for (const auto& b : h) {
    CHECK(b.mass == doctest::Approx(1.0 / 16));
    total += b.mass;
  }
  CHECK(total == doctest::Approx(1.0));
  CHECK(h.front().left == doctest::Approx(-kPi));
  CHECK(h.back().right == doctest::Approx(kPi));

  const auto edge = empirical_density({-kPi, kPi - 1e-9}, 8);
  CHECK(edge.front().mass == 0.5);
  CHECK(edge.back().mass == 0.5);

  CHECK_THROWS_AS(empirical_density(angles, 7), Error);
  CHECK_THROWS_AS(empirical_density({}, 8), Error);
}
