#pragma once

#include <complex>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "freecircle/error.hpp"
#include "freecircle/series.hpp"

namespace freecircle {

using Complex = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

// Zero-mean test and uniformity test tolerance.
inline constexpr double kZeroTolerance = 1e-12;

// Default |c1| below which the S-transform is refused.
inline constexpr double kSConditioningThreshold = 1e-6;

// Reduces an angle to [-pi, pi). Angles within 1e-15 of a multiple of pi/2
// snap to the exact representative so their moments come out exact.
double canonical_angle(double theta);

// e^{i k theta} with the quarter-turn angles evaluated exactly.
Complex unit_power(double theta, long k);

struct Atom {
  double angle = 0.0;   // radians, canonical in [-pi, pi)
  double weight = 0.0;  // > 0
};

// Finite combination of point masses on the unit circle. Construction
// canonicalizes angles, merges atoms closer than 1e-12 and sorts by angle.
class AtomicMeasure {
 public:
  explicit AtomicMeasure(std::vector<Atom> atoms);

  static AtomicMeasure point_mass(double theta);
  // Weight p on +1 and 1 - p on -1.
  static AtomicMeasure bernoulli(double p);

  const std::vector<Atom>& atoms() const { return atoms_; }

 private:
  std::vector<Atom> atoms_;
};

// Moments c[0..K] of a circle measure, c[k] = integral of xi^k.
class MomentVector {
 public:
  explicit MomentVector(Eigen::VectorXcd c);

  int order() const { return static_cast<int>(c_.size()) - 1; }
  const Eigen::VectorXcd& values() const { return c_; }

  // c[k] for |k| <= order; negative k uses c[-k] = conj(c[k]).
  Complex operator[](int k) const;

  // First K+1 moments; InsufficientOrder if K exceeds the stored order.
  MomentVector truncated(int K) const;

  static MomentVector uniform(int K);

 private:
  Eigen::VectorXcd c_;
};

MomentVector moments(const AtomicMeasure& m, int K);

// A probability measure on the unit circle held exactly (atoms), through
// finitely many moments, or as the named uniform law.
class CircleMeasure {
 public:
  CircleMeasure(AtomicMeasure atoms);  // NOLINT(google-explicit-constructor)
  CircleMeasure(MomentVector moments);  // NOLINT(google-explicit-constructor)
  // Both representations; they must agree to 1e-12.
  CircleMeasure(AtomicMeasure atoms, MomentVector moments);

  static CircleMeasure uniform();

  bool is_uniform() const { return uniform_; }
  bool has_atoms() const { return atoms_.has_value(); }
  const std::optional<AtomicMeasure>& atoms() const { return atoms_; }
  const std::optional<MomentVector>& stored_moments() const { return moments_; }

  // Highest moment index available; -1 means unlimited (atoms or uniform).
  int available_order() const;

  MomentVector moments(int K) const;
  Complex first_moment() const;

 private:
  CircleMeasure() = default;

  std::optional<AtomicMeasure> atoms_;
  std::optional<MomentVector> moments_;
  bool uniform_ = false;
};

// psi(z) = sum_{k>=1} c_k z^k for |z| < 1. Atomic measures use the closed
// form; moment-only measures need |z|^{K+1} / (1 - |z|) < tail_tolerance.
Complex psi_eval(const CircleMeasure& m, Complex z, double tail_tolerance = 1e-12);

Series psi_series(const CircleMeasure& m, int K);

// S(u) = (1 + u) psi^{-1}(u) / u through u^K, evaluated in `Scalar`.
// Consumes moments through order K + 1.
template <typename Scalar = Complex>
TruncatedSeries<Scalar> s_series(const CircleMeasure& m, int K,
                                 double threshold = kSConditioningThreshold) {
  const Complex a = m.first_moment();
  if (std::abs(a) == 0.0 || std::abs(a) < threshold) {
    throw Error(ErrorKind::STransformUndefined,
                "S-transform undefined: |E(X)| = " + std::to_string(std::abs(a)) +
                    " is below the conditioning threshold");
  }
  const auto psi = psi_series(m, K + 1).template cast<Scalar>();
  const auto inverse_over_u = divide_by_z(revert(psi));
  auto one_plus_u = TruncatedSeries<Scalar>::one(K);
  one_plus_u[1] = Scalar(1);
  return mul(one_plus_u, inverse_over_u);
}

CircleMeasure rotate(const CircleMeasure& m, double phi);

struct PhaseNormalized {
  CircleMeasure measure;
  double angle;  // rotation that was applied
};

// Rotates so that the first moment becomes real and positive.
PhaseNormalized normalize_phase(const CircleMeasure& m);

struct DensityPoint {
  double omega;
  double density;
};

// (1/pi) Re psi(r e^{i omega}) + 1/(2 pi) on omega_j = -pi + 2 pi j / n_grid.
std::vector<DensityPoint> poisson_density(const CircleMeasure& m, double r, int n_grid,
                                          double tail_tolerance = 1e-12);

}  // namespace freecircle
