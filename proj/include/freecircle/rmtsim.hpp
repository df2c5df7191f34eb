#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "freecircle/measure.hpp"

namespace freecircle {

using Rng = std::mt19937_64;

// Seed for the stream owned by (trial, factor); independent of scheduling.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t trial, std::uint64_t factor);

// Haar-distributed unitary: QR of a complex Ginibre matrix with the phases of
// R's diagonal folded back into Q.
Eigen::MatrixXcd haar_unitary(int N, Rng& rng);

// U D U^* with D holding N i.i.d. draws from m and U Haar.
Eigen::MatrixXcd sample_factor(const AtomicMeasure& m, int N, Rng& rng);

inline constexpr double kDefaultFlopBudget = 2e11;

struct SimConfig {
  int N = 64;
  int trials = 1;
  std::uint64_t seed = 0;
  int K = 4;
  std::vector<AtomicMeasure> factors;
  bool collect_angles = true;
  // Refuse runs with N^3 * factors * trials above this.
  double flop_budget = kDefaultFlopBudget;
};

struct AngleSample {
  int trial;
  int index;
  double angle;
};

struct SimResult {
  std::vector<Complex> empirical_moments;  // index k = 0..K, trial means of tr(P^k)/N
  std::vector<Complex> predicted_moments;  // from the free convolution of the factors
  std::vector<double> standard_errors;     // per k, across trials
  std::vector<AngleSample> eigenangles;    // empty unless collect_angles
  double max_unitarity_error = 0.0;        // max over trials of |P^* P - I|_max
};

double estimated_flops(const SimConfig& cfg);

SimResult simulate_product(const SimConfig& cfg);

struct HistogramBin {
  double left;
  double right;
  double mass;
};

// Fraction of angles in each of `bins` equal slices of [-pi, pi).
std::vector<HistogramBin> empirical_density(const std::vector<double>& angles, int bins);

}  // namespace freecircle
