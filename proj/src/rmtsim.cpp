#include "freecircle/rmtsim.hpp"

#include <cmath>
#include <string>

#include "freecircle/freeconv.hpp"

namespace freecircle {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// tr(A B) / N without forming the product.
Complex normalized_trace_product(const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& B) {
  return (A.array() * B.transpose().array()).sum() / static_cast<double>(A.rows());
}

}  // namespace

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t trial, std::uint64_t factor) {
  return splitmix64(splitmix64(splitmix64(seed) ^ trial) ^ (factor + 0x632be59bd9b4e019ull));
}

Eigen::MatrixXcd haar_unitary(int N, Rng& rng) {
  if (N < 1) throw Error(ErrorKind::Domain, "matrix dimension must be positive");
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  Eigen::MatrixXcd Z(N, N);
  for (int j = 0; j < N; ++j) {
    for (int i = 0; i < N; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      Z(i, j) = Complex(re, im);
    }
  }
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(Z);
  Eigen::MatrixXcd Q = qr.householderQ();
  const auto& R = qr.matrixQR();
  for (int j = 0; j < N; ++j) {
    const Complex r = R(j, j);
    const double mod = std::abs(r);
    if (mod > 0.0) Q.col(j) *= r / mod;
  }
  return Q;
}

Eigen::MatrixXcd sample_factor(const AtomicMeasure& m, int N, Rng& rng) {
  std::vector<double> weights;
  for (const Atom& a : m.atoms()) weights.push_back(a.weight);
  std::discrete_distribution<int> pick(weights.begin(), weights.end());
  Eigen::VectorXcd d(N);
  for (int i = 0; i < N; ++i) d[i] = unit_power(m.atoms()[static_cast<std::size_t>(pick(rng))].angle, 1);
  const Eigen::MatrixXcd U = haar_unitary(N, rng);
  return U * d.asDiagonal() * U.adjoint();
}

double estimated_flops(const SimConfig& cfg) {
  const double n = static_cast<double>(cfg.N);
  return n * n * n * static_cast<double>(cfg.factors.size()) * static_cast<double>(cfg.trials);
}

SimResult simulate_product(const SimConfig& cfg) {
  if (cfg.N < 2 || cfg.trials < 1 || cfg.K < 1 || cfg.factors.empty()) {
    throw Error(ErrorKind::Config, "simulation needs N >= 2, trials >= 1, K >= 1 and at least one factor");
  }
  const double flops = estimated_flops(cfg);
  if (flops > cfg.flop_budget) {
    throw Error(ErrorKind::Budget, "simulation needs about " + std::to_string(flops) +
                                       " flops (N^3 * factors * trials), budget is " +
                                       std::to_string(cfg.flop_budget));
  }
  const int N = cfg.N;
  const int K = cfg.K;

  SimResult out;
  std::vector<MomentVector> seq;
  for (const AtomicMeasure& f : cfg.factors) seq.push_back(moments(f, K));
  const MomentVector predicted = product_moments(seq, K).back();
  for (int k = 0; k <= K; ++k) out.predicted_moments.push_back(predicted[k]);

  // per[k][t]: normalized trace of P^k in trial t
  std::vector<std::vector<Complex>> per(static_cast<std::size_t>(K + 1));
  for (int t = 0; t < cfg.trials; ++t) {
    Eigen::MatrixXcd P;
    for (std::size_t f = 0; f < cfg.factors.size(); ++f) {
      Rng rng(stream_seed(cfg.seed, static_cast<std::uint64_t>(t), f));
      Eigen::MatrixXcd X = sample_factor(cfg.factors[f], N, rng);
      if (f == 0) {
        P = std::move(X);
      } else {
        P = P * X;
      }
    }
    const Eigen::MatrixXcd identity = Eigen::MatrixXcd::Identity(N, N);
    out.max_unitarity_error =
        std::max(out.max_unitarity_error, (P.adjoint() * P - identity).cwiseAbs().maxCoeff());

    // tr(P^k) = tr(P^i P^j) with i = ceil(k/2), j = floor(k/2).
    std::vector<Eigen::MatrixXcd> powers{identity, P};
    while (static_cast<int>(powers.size()) <= (K + 1) / 2) powers.push_back(powers.back() * P);
    for (int k = 1; k <= K; ++k) {
      const Complex m = normalized_trace_product(powers[static_cast<std::size_t>((k + 1) / 2)],
                                                 powers[static_cast<std::size_t>(k / 2)]);
      per[static_cast<std::size_t>(k)].push_back(m);
    }

    if (cfg.collect_angles) {
      Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(P, false);
      const auto& values = solver.eigenvalues();
      for (int i = 0; i < N; ++i) out.eigenangles.push_back({t, i, canonical_angle(std::arg(values[i]))});
    }
  }

  const double T = static_cast<double>(cfg.trials);
  out.empirical_moments.assign(static_cast<std::size_t>(K + 1), Complex(1.0));
  out.standard_errors.assign(static_cast<std::size_t>(K + 1), 0.0);
  for (int k = 1; k <= K; ++k) {
    const auto i = static_cast<std::size_t>(k);
    Complex mean = 0.0;
    for (Complex m : per[i]) mean += m;
    mean /= T;
    out.empirical_moments[i] = mean;
    if (cfg.trials > 1) {
      double var = 0.0;
      for (Complex m : per[i]) var += std::norm(m - mean);
      out.standard_errors[i] = std::sqrt(var / (T - 1.0) / T);
    }
  }
  return out;
}

std::vector<HistogramBin> empirical_density(const std::vector<double>& angles, int bins) {
  if (bins < 8) throw Error(ErrorKind::Domain, "histogram needs at least 8 bins");
  if (angles.empty()) throw Error(ErrorKind::Domain, "histogram of an empty sample");
  std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
  const double width = 2.0 * kPi / bins;
  for (double theta : angles) {
    const double t = canonical_angle(theta);
    auto b = static_cast<int>(std::floor((t + kPi) / width));
    b = std::clamp(b, 0, bins - 1);
    counts[static_cast<std::size_t>(b)] += 1.0;
  }
  std::vector<HistogramBin> out;
  const double total = static_cast<double>(angles.size());
  for (int b = 0; b < bins; ++b) {
    out.push_back({-kPi + b * width, -kPi + (b + 1) * width, counts[static_cast<std::size_t>(b)] / total});
  }
  return out;
}

}  // namespace freecircle
