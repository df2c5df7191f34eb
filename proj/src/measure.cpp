#include "freecircle/measure.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace freecircle {

namespace {

constexpr double kTwoPi = 2.0 * kPi;
constexpr double kHalfPi = 0.5 * kPi;
constexpr double kAtomMergeTolerance = 1e-12;
constexpr double kSnapTolerance = 1e-15;
constexpr double kMomentBoundSlack = 1e-9;

// Quarter-turn index q with theta == q * pi/2 exactly, or -1.
int quarter_turn(double theta) {
  if (theta == 0.0) return 0;
  if (theta == kHalfPi) return 1;
  if (theta == -kPi) return 2;
  if (theta == -kHalfPi) return 3;
  return -1;
}

}  // namespace

double canonical_angle(double theta) {
  if (!std::isfinite(theta)) {
    throw Error(ErrorKind::InvalidMeasure, "atom angle is not finite");
  }
  double t = theta - kTwoPi * std::floor((theta + kPi) / kTwoPi);
  if (t >= kPi) t -= kTwoPi;
  if (t < -kPi) t += kTwoPi;
  for (double snap : {-kPi, -kHalfPi, 0.0, kHalfPi, kPi}) {
    if (std::abs(t - snap) <= kSnapTolerance) t = (snap == kPi) ? -kPi : snap;
  }
  return t;
}

Complex unit_power(double theta, long k) {
  const int q = quarter_turn(theta);
  if (q >= 0) {
    switch (((q * k) % 4 + 4) % 4) {
      case 0: return {1.0, 0.0};
      case 1: return {0.0, 1.0};
      case 2: return {-1.0, 0.0};
      default: return {0.0, -1.0};
    }
  }
  return std::polar(1.0, static_cast<double>(k) * theta);
}

AtomicMeasure::AtomicMeasure(std::vector<Atom> atoms) {
  if (atoms.empty()) throw Error(ErrorKind::InvalidMeasure, "atomic measure has no atoms");
  double total = 0.0;
  for (Atom& a : atoms) {
    if (!(a.weight > 0.0) || !std::isfinite(a.weight)) {
      throw Error(ErrorKind::InvalidMeasure, "atom weight must be positive, got " + std::to_string(a.weight));
    }
    a.angle = canonical_angle(a.angle);
    total += a.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw Error(ErrorKind::InvalidMeasure, "atom weights sum to " + std::to_string(total) + ", not 1");
  }
  std::sort(atoms.begin(), atoms.end(), [](const Atom& x, const Atom& y) { return x.angle < y.angle; });
  for (const Atom& a : atoms) {
    if (!atoms_.empty() && a.angle - atoms_.back().angle <= kAtomMergeTolerance) {
      atoms_.back().weight += a.weight;
    } else {
      atoms_.push_back(a);
    }
  }
  // -pi and pi - eps are the same point.
  if (atoms_.size() > 1 && atoms_.back().angle - atoms_.front().angle >= kTwoPi - kAtomMergeTolerance) {
    atoms_.front().weight += atoms_.back().weight;
    atoms_.pop_back();
  }
}

AtomicMeasure AtomicMeasure::point_mass(double theta) { return AtomicMeasure({{theta, 1.0}}); }

AtomicMeasure AtomicMeasure::bernoulli(double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(ErrorKind::InvalidMeasure, "bernoulli parameter p must lie in [0, 1], got " + std::to_string(p));
  }
  if (p == 1.0) return point_mass(0.0);
  if (p == 0.0) return point_mass(kPi);
  return AtomicMeasure({{0.0, p}, {kPi, 1.0 - p}});
}

MomentVector::MomentVector(Eigen::VectorXcd c) : c_(std::move(c)) {
  if (c_.size() < 2) throw Error(ErrorKind::InvalidMeasure, "moment vector needs order >= 1");
  if (std::abs(c_[0] - Complex(1.0)) > 1e-12) {
    throw Error(ErrorKind::InvalidMeasure, "moment c[0] must equal 1");
  }
  c_[0] = 1.0;
  for (Eigen::Index k = 1; k < c_.size(); ++k) {
    if (!std::isfinite(c_[k].real()) || !std::isfinite(c_[k].imag()) ||
        std::abs(c_[k]) > 1.0 + kMomentBoundSlack) {
      throw Error(ErrorKind::InvalidMeasure,
                  "moment c[" + std::to_string(k) + "] exceeds 1 in modulus");
    }
  }
}

Complex MomentVector::operator[](int k) const {
  const int m = std::abs(k);
  if (m > order()) {
    throw Error(ErrorKind::InsufficientOrder,
                "moment " + std::to_string(k) + " requested from a vector of order " + std::to_string(order()));
  }
  return k >= 0 ? c_[m] : std::conj(c_[m]);
}

MomentVector MomentVector::truncated(int K) const {
  if (K > order()) {
    throw Error(ErrorKind::InsufficientOrder,
                "need moments through " + std::to_string(K) + ", have " + std::to_string(order()));
  }
  return MomentVector(c_.head(K + 1));
}

MomentVector MomentVector::uniform(int K) {
  Eigen::VectorXcd c = Eigen::VectorXcd::Zero(K + 1);
  c[0] = 1.0;
  return MomentVector(std::move(c));
}

MomentVector moments(const AtomicMeasure& m, int K) {
  if (K < 1) throw Error(ErrorKind::InsufficientOrder, "moment order K must be >= 1");
  Eigen::VectorXcd c = Eigen::VectorXcd::Zero(K + 1);
  c[0] = 1.0;
  for (int k = 1; k <= K; ++k) {
    Complex acc(0.0);
    for (const Atom& a : m.atoms()) acc += a.weight * unit_power(a.angle, k);
    c[k] = acc;
  }
  return MomentVector(std::move(c));
}

CircleMeasure::CircleMeasure(AtomicMeasure atoms) : atoms_(std::move(atoms)) {}

CircleMeasure::CircleMeasure(MomentVector moments) : moments_(std::move(moments)) {}

CircleMeasure::CircleMeasure(AtomicMeasure atoms, MomentVector moments)
    : atoms_(std::move(atoms)), moments_(std::move(moments)) {
  const MomentVector exact = freecircle::moments(*atoms_, moments_->order());
  if ((exact.values() - moments_->values()).cwiseAbs().maxCoeff() > 1e-12) {
    throw Error(ErrorKind::InvalidMeasure, "atomic and moment representations disagree");
  }
}

CircleMeasure CircleMeasure::uniform() {
  CircleMeasure m;
  m.uniform_ = true;
  return m;
}

int CircleMeasure::available_order() const {
  if (uniform_ || atoms_) return -1;
  return moments_->order();
}

MomentVector CircleMeasure::moments(int K) const {
  if (uniform_) return MomentVector::uniform(K);
  if (atoms_) return freecircle::moments(*atoms_, K);
  return moments_->truncated(K);
}

Complex CircleMeasure::first_moment() const { return moments(1)[1]; }

Complex psi_eval(const CircleMeasure& m, Complex z, double tail_tolerance) {
  const double r = std::abs(z);
  if (!(r < 1.0)) throw Error(ErrorKind::Domain, "psi is defined only for |z| < 1");
  if (m.is_uniform()) return 0.0;
  if (m.has_atoms()) {
    // integral of xi z / (1 - xi z)
    Complex acc(0.0);
    for (const Atom& a : m.atoms()->atoms()) {
      const Complex xz = unit_power(a.angle, 1) * z;
      acc += a.weight * xz / (1.0 - xz);
    }
    return acc;
  }
  const MomentVector& c = *m.stored_moments();
  const int K = c.order();
  const double tail = std::pow(r, K + 1) / (1.0 - r);
  if (!(tail < tail_tolerance)) {
    throw Error(ErrorKind::InsufficientOrder,
                "moment order " + std::to_string(K) + " too low for |z| = " + std::to_string(r) +
                    " (tail bound " + std::to_string(tail) + ")");
  }
  Complex acc = c[K];
  for (int k = K - 1; k >= 1; --k) acc = acc * z + c[k];
  return acc * z;
}

Series psi_series(const CircleMeasure& m, int K) {
  const MomentVector c = m.moments(K);
  Series s(K);
  for (int k = 1; k <= K; ++k) s[k] = c[k];
  return s;
}

CircleMeasure rotate(const CircleMeasure& m, double phi) {
  if (m.is_uniform()) return m;
  std::optional<AtomicMeasure> atoms;
  if (m.has_atoms()) {
    std::vector<Atom> shifted = m.atoms()->atoms();
    for (Atom& a : shifted) a.angle += phi;
    atoms.emplace(std::move(shifted));
  }
  if (!m.stored_moments()) return CircleMeasure(std::move(*atoms));
  Eigen::VectorXcd c = m.stored_moments()->values();
  for (Eigen::Index k = 1; k < c.size(); ++k) c[k] *= std::polar(1.0, static_cast<double>(k) * phi);
  MomentVector rotated(std::move(c));
  if (atoms) {
    // Re-derive so the two representations stay consistent to the last bit.
    return CircleMeasure(*atoms, moments(*atoms, rotated.order()));
  }
  return CircleMeasure(std::move(rotated));
}

PhaseNormalized normalize_phase(const CircleMeasure& m) {
  const Complex a = m.first_moment();
  if (std::abs(a) <= kZeroTolerance) {
    throw Error(ErrorKind::PhaseUndefined, "phase undefined: first moment is zero");
  }
  const double phi = (a.imag() == 0.0 && a.real() > 0.0) ? 0.0 : -std::arg(a);
  return {rotate(m, phi), phi};
}

std::vector<DensityPoint> poisson_density(const CircleMeasure& m, double r, int n_grid,
                                          double tail_tolerance) {
  if (!(r > 0.0 && r < 1.0)) throw Error(ErrorKind::Domain, "Poisson radius must lie in (0, 1)");
  if (n_grid < 1) throw Error(ErrorKind::Domain, "n_grid must be positive");
  std::vector<DensityPoint> out;
  out.reserve(static_cast<std::size_t>(n_grid));
  for (int j = 0; j < n_grid; ++j) {
    const double omega = -kPi + kTwoPi * j / n_grid;
    const Complex psi = psi_eval(m, std::polar(r, omega), tail_tolerance);
    out.push_back({omega, psi.real() / kPi + 1.0 / kTwoPi});
  }
  return out;
}

}  // namespace freecircle
