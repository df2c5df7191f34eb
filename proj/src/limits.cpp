#include "freecircle/limits.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace freecircle {

namespace {

using Params = std::vector<std::pair<std::string, double>>;

enum class ProductLimit { ToZero, NotToZero };

struct ProductDecision {
  ProductLimit limit = ProductLimit::ToZero;
  std::string evidence;
  bool indeterminate = false;
};

// Divergence of sum (1 - |a_k|) known from the rule alone.
std::optional<TailBehavior> analytic_tail(const SequenceSpec& spec) {
  if (spec.kind() == SequenceSpec::Kind::Repeated) {
    const double a = std::abs(spec.measure(1).first_moment());
    return a < 1.0 ? TailBehavior::Diverges : TailBehavior::Converges;
  }
  if (spec.kind() != SequenceSpec::Kind::BernoulliRule) return std::nullopt;
  const BernoulliRule& r = *spec.rule();
  switch (r.form) {
    case BernoulliRule::Form::Constant:
      return std::abs(2.0 * r.p - 1.0) < 1.0 ? TailBehavior::Diverges : TailBehavior::Converges;
    case BernoulliRule::Form::COverKPowS:
      // a_k -> c (s = 0) or 0 (s > 0)
      if (r.s > 0.0 || std::abs(r.c) < 1.0) return TailBehavior::Diverges;
      return TailBehavior::Converges;
    case BernoulliRule::Form::OneMinusCOverKPowS:
      if (r.c == 0.0) return TailBehavior::Converges;
      return r.s <= 1.0 ? TailBehavior::Diverges : TailBehavior::Converges;
    case BernoulliRule::Form::Explicit:
      return std::nullopt;
  }
  return std::nullopt;
}

// lim inf |a_k| known from the rule alone.
std::optional<double> analytic_liminf(const SequenceSpec& spec) {
  if (spec.kind() == SequenceSpec::Kind::Repeated) return std::abs(spec.measure(1).first_moment());
  if (spec.kind() != SequenceSpec::Kind::BernoulliRule) return std::nullopt;
  const BernoulliRule& r = *spec.rule();
  switch (r.form) {
    case BernoulliRule::Form::Constant: return std::abs(2.0 * r.p - 1.0);
    case BernoulliRule::Form::COverKPowS: return r.s > 0.0 ? 0.0 : std::abs(r.c);
    case BernoulliRule::Form::OneMinusCOverKPowS: return r.s > 0.0 ? 1.0 : std::abs(1.0 - 2.0 * r.c);
    case BernoulliRule::Form::Explicit: return std::nullopt;
  }
  return std::nullopt;
}

double partial_product(const std::vector<double>& a, std::size_t from) {
  double p = 1.0;
  for (std::size_t i = from; i < a.size(); ++i) p *= a[i];
  return p;
}

// Decides whether prod_{i >= from} a_i tends to zero (0-based `from`).
ProductDecision decide_product(const SequenceSpec& spec, const std::vector<double>& a, std::size_t from,
                               const ClassifyOptions& options) {
  const auto analytic = analytic_tail(spec);
  if (spec.tail() != TailBehavior::Unknown) {
    if (analytic && *analytic != spec.tail()) {
      throw Error(ErrorKind::InvalidSpec, "declared tail behavior contradicts the sequence rule");
    }
    return {spec.tail() == TailBehavior::Diverges ? ProductLimit::ToZero : ProductLimit::NotToZero, "tail-flag",
            false};
  }
  if (analytic) {
    return {*analytic == TailBehavior::Diverges ? ProductLimit::ToZero : ProductLimit::NotToZero, "analytic",
            false};
  }
  const double product = partial_product(a, from);
  if (product < options.product_zero_tolerance) return {ProductLimit::ToZero, "numeric", false};
  const std::size_t count = a.size() - std::min(from, a.size());
  double late_alpha = 0.0;
  for (std::size_t i = a.size() - count / 2; i < a.size(); ++i) late_alpha += 1.0 - a[i];
  if (late_alpha < options.cauchy_tolerance) return {ProductLimit::NotToZero, "numeric", false};
  return {product < 1e-2 ? ProductLimit::ToZero : ProductLimit::NotToZero, "favored", true};
}

void require_sequence_index(const SequenceSpec& spec, int i) {
  if (i < 1) throw Error(ErrorKind::InvalidSpec, "sequence positions are 1-based");
  if (auto len = spec.length(); len && i > *len) {
    throw Error(ErrorKind::InvalidSpec,
                "position " + std::to_string(i) + " beyond sequence length " + std::to_string(*len));
  }
}

// First moments of mu_1..mu_n after phase normalization (zero-mean factors
// stay at zero). Throws NotApplicable when some factor has zero mean.
std::vector<double> positive_means(const SequenceSpec& spec, int n, const char* what) {
  std::vector<double> a;
  a.reserve(static_cast<std::size_t>(n));
  for (int i = 1; i <= n; ++i) {
    const double ai = std::abs(spec.measure(i).first_moment());
    if (ai <= kZeroTolerance) {
      throw Error(ErrorKind::NotApplicable,
                  std::string(what) + ": factor " + std::to_string(i) + " has zero mean");
    }
    a.push_back(ai);
  }
  return a;
}

std::vector<Complex> polar_grid(double max_radius, int radii, int angles) {
  std::vector<Complex> grid;
  for (int j = 1; j <= radii; ++j) {
    const double r = max_radius * j / radii;
    for (int t = 0; t < angles; ++t) grid.push_back(std::polar(r, -kPi + 2.0 * kPi * t / angles));
  }
  return grid;
}

bool inside(Complex z, double radius) { return std::abs(z) <= radius * (1.0 + 1e-12); }

Params z_params(Complex z) { return {{"z_re", z.real()}, {"z_im", z.imag()}}; }

}  // namespace

double BernoulliRule::p_at(int k, int offset) const {
  const double kk = static_cast<double>(k);
  switch (form) {
    case Form::Constant: return p;
    case Form::COverKPowS: return 0.5 * (1.0 + c * std::pow(kk, -s));
    case Form::OneMinusCOverKPowS: return 1.0 - c * std::pow(kk, -s);
    case Form::Explicit: {
      const int j = k - offset - 1;
      if (j < 0 || j >= static_cast<int>(p_list.size())) {
        throw Error(ErrorKind::InvalidSpec, "explicit rule has no entry for position " + std::to_string(k));
      }
      return p_list[static_cast<std::size_t>(j)];
    }
  }
  return p;
}

SequenceSpec::SequenceSpec(Kind kind, std::vector<CircleMeasure> prefix, std::optional<BernoulliRule> rule,
                           TailBehavior tail)
    : kind_(kind), prefix_(std::move(prefix)), rule_(std::move(rule)), tail_(tail) {}

SequenceSpec SequenceSpec::explicit_list(std::vector<CircleMeasure> measures, TailBehavior tail) {
  if (measures.empty()) throw Error(ErrorKind::InvalidSpec, "explicit sequence is empty");
  return SequenceSpec(Kind::Explicit, std::move(measures), std::nullopt, tail);
}

SequenceSpec SequenceSpec::bernoulli_rule(BernoulliRule rule, std::vector<CircleMeasure> prefix,
                                          TailBehavior tail) {
  if (rule.form == BernoulliRule::Form::Explicit && rule.p_list.empty() && prefix.empty()) {
    throw Error(ErrorKind::InvalidSpec, "bernoulli rule sequence is empty");
  }
  return SequenceSpec(Kind::BernoulliRule, std::move(prefix), std::move(rule), tail);
}

SequenceSpec SequenceSpec::repeated(CircleMeasure measure, TailBehavior tail) {
  return SequenceSpec(Kind::Repeated, {std::move(measure)}, std::nullopt, tail);
}

std::optional<int> SequenceSpec::length() const {
  switch (kind_) {
    case Kind::Explicit: return static_cast<int>(prefix_.size());
    case Kind::Repeated: return std::nullopt;
    case Kind::BernoulliRule:
      if (rule_->form == BernoulliRule::Form::Explicit) {
        return static_cast<int>(prefix_.size() + rule_->p_list.size());
      }
      return std::nullopt;
  }
  return std::nullopt;
}

CircleMeasure SequenceSpec::measure(int i) const {
  require_sequence_index(*this, i);
  auto base = [&]() -> CircleMeasure {
    if (kind_ == Kind::Repeated) return prefix_.front();
    if (i <= static_cast<int>(prefix_.size())) return prefix_[static_cast<std::size_t>(i - 1)];
    const double p = rule_->p_at(i, static_cast<int>(prefix_.size()));
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(ErrorKind::InvalidSpec,
                  "rule gives p = " + std::to_string(p) + " outside [0, 1] at position " + std::to_string(i));
    }
    return AtomicMeasure::bernoulli(p);
  };
  if (i <= static_cast<int>(phases_.size())) return rotate(base(), phases_[static_cast<std::size_t>(i - 1)]);
  return base();
}

SequenceSpec SequenceSpec::rotated(std::vector<double> angles) const {
  SequenceSpec out = *this;
  if (out.phases_.size() < angles.size()) out.phases_.resize(angles.size(), 0.0);
  for (std::size_t i = 0; i < angles.size(); ++i) out.phases_[i] += angles[i];
  return out;
}

const char* to_string(CaseLabel label) {
  switch (label) {
    case CaseLabel::I: return "I";
    case CaseLabel::II: return "II";
    case CaseLabel::III_1: return "III.1";
    case CaseLabel::III_2: return "III.2";
    case CaseLabel::IV_1: return "IV.1";
    case CaseLabel::IV_2: return "IV.2";
    case CaseLabel::IV_3: return "IV.3";
  }
  return "?";
}

bool looks_uniform(const CircleMeasure& m, int order) {
  if (m.is_uniform()) return true;
  const int available = m.available_order();
  const int K = available < 0 ? order : std::min(order, available);
  const MomentVector c = m.moments(K);
  for (int k = 1; k <= K; ++k) {
    if (std::abs(c[k]) > kZeroTolerance) return false;
  }
  return true;
}

ClassificationResult classify(const SequenceSpec& spec, int horizon, const ClassifyOptions& options) {
  if (horizon < 2) throw Error(ErrorKind::InvalidSpec, "classification horizon must be >= 2");
  int H = horizon;
  if (auto len = spec.length()) H = std::min(H, *len);
  if (H < 2) throw Error(ErrorKind::InvalidSpec, "sequence has fewer than two factors");

  ClassificationResult out;
  out.horizon = H;
  std::vector<double> a(static_cast<std::size_t>(H));
  for (int i = 1; i <= H; ++i) {
    const Complex c1 = spec.measure(i).first_moment();
    const double modulus = std::abs(c1);
    if (modulus <= kZeroTolerance) {
      out.zero_mean_indices.push_back(i);
      out.normalization_angles.push_back(0.0);
      a[static_cast<std::size_t>(i - 1)] = 0.0;
    } else {
      out.normalization_angles.push_back(0.0 - std::arg(c1));
      a[static_cast<std::size_t>(i - 1)] = modulus;
    }
  }

  auto finish = [&](CaseLabel label) {
    out.label = label;
    out.converges_to_uniform = label != CaseLabel::I && label != CaseLabel::IV_3;
    return out;
  };
  auto apply = [&](const ProductDecision& d) {
    out.product_evidence = d.evidence;
    out.indeterminate = d.indeterminate;
  };

  const auto& zeros = out.zero_mean_indices;
  if (zeros.size() >= 2) {
    out.witnesses = {{"zero_index_first", zeros[0]}, {"zero_index_second", zeros[1]}};
    return finish(CaseLabel::II);
  }

  if (zeros.size() == 1) {
    const int i = zeros.front();
    out.witnesses.push_back({"zero_index", i});
    if (looks_uniform(spec.measure(i), options.uniformity_order)) return finish(CaseLabel::IV_1);
    const double tail_product = partial_product(a, static_cast<std::size_t>(i));
    out.witnesses.push_back({"tail_product_at_horizon", tail_product});
    const ProductDecision d = decide_product(spec, a, static_cast<std::size_t>(i), options);
    apply(d);
    return finish(d.limit == ProductLimit::ToZero ? CaseLabel::IV_2 : CaseLabel::IV_3);
  }

  double alpha_sum = 0.0;
  for (double ai : a) alpha_sum += 1.0 - ai;
  out.witnesses.push_back({"product_at_horizon", partial_product(a, 0)});
  out.witnesses.push_back({"alpha_sum_at_horizon", alpha_sum});
  const ProductDecision d = decide_product(spec, a, 0, options);
  apply(d);
  if (d.limit == ProductLimit::NotToZero) return finish(CaseLabel::I);

  double liminf = 0.0;
  if (auto analytic = analytic_liminf(spec)) {
    liminf = *analytic;
  } else {
    liminf = *std::min_element(a.begin() + static_cast<std::ptrdiff_t>(a.size() / 2), a.end());
    if (liminf < options.product_zero_tolerance) liminf = 0.0;
  }
  out.witnesses.push_back({"liminf_a", liminf});
  return finish(liminf == 0.0 ? CaseLabel::III_1 : CaseLabel::III_2);
}

std::vector<DiagnosticRow> diagnose(const SequenceSpec& spec, int n_max, int K, const JointMomentOptions& options) {
  if (n_max < 1 || K < 1) throw Error(ErrorKind::InvalidSpec, "diagnose needs n_max >= 1 and K >= 1");
  int n = n_max;
  if (auto len = spec.length()) n = std::min(n, *len);
  std::vector<MomentVector> seq;
  seq.reserve(static_cast<std::size_t>(n));
  for (int i = 1; i <= n; ++i) seq.push_back(spec.measure(i).moments(K));
  const auto products = product_moments(seq, K, kRouteThreshold, options);
  std::vector<DiagnosticRow> table;
  for (std::size_t j = 0; j < products.size(); ++j) {
    double worst = 0.0;
    for (int k = 1; k <= K; ++k) worst = std::max(worst, std::abs(products[j][k]));
    table.push_back({static_cast<int>(j + 1), worst});
  }
  return table;
}

bool empirically_converging(const std::vector<DiagnosticRow>& table, double tolerance) {
  return !table.empty() && table.back().max_moment < tolerance;
}

void BoundReport::add(Params params, double lhs, double rhs) {
  const double margin = rhs - lhs;
  min_margin = points.empty() ? margin : std::min(min_margin, margin);
  if (!(margin >= -kMarginTolerance)) pass = false;
  points.push_back({std::move(params), lhs, rhs, margin});
}

BoundReport check_ck_bound(const SequenceSpec& spec, int n, int K) {
  if (n < 1 || K < 1) throw Error(ErrorKind::NotApplicable, "check_ck_bound needs n >= 1 and K >= 1");
  const std::vector<double> a = positive_means(spec, n, "check_ck_bound");
  const double a_min = *std::min_element(a.begin(), a.end());
  double alpha_sum = 0.0;
  for (double ai : a) alpha_sum += 1.0 - ai;
  if (!(alpha_sum > 1.0)) {
    throw Error(ErrorKind::NotApplicable,
                "check_ck_bound: sum of alpha_i is " + std::to_string(alpha_sum) + ", needs to exceed 1");
  }
  std::vector<MomentVector> seq;
  for (int i = 1; i <= n; ++i) seq.push_back(spec.measure(i).moments(K));
  const MomentVector product = product_moments(seq, K).back();

  BoundReport report;
  report.id = "ck-estimate";
  const double base = kCkConstant / (a_min * a_min) * alpha_sum * std::exp(-alpha_sum);
  for (int k = 1; k <= K; ++k) {
    report.add({{"n", n}, {"k", k}, {"a", a_min}, {"alpha_sum", alpha_sum}}, std::abs(product[k]),
               std::pow(base, k));
  }
  return report;
}

std::vector<BoundReport> verify_lemma_bounds(const AtomicMeasure& m, const std::vector<Complex>& z_grid, int k_max,
                                             const LemmaGridOptions& options) {
  const CircleMeasure measure(m);
  const Complex c1 = measure.first_moment();
  const double a = c1.real();
  if (std::abs(c1.imag()) > kZeroTolerance || !(a > 0.0) || a > 1.0 + kZeroTolerance) {
    throw Error(ErrorKind::NotApplicable, "verify_lemma_bounds needs a real first moment in (0, 1]");
  }
  if (k_max < 1) throw Error(ErrorKind::NotApplicable, "k_max must be >= 1");
  const double alpha = std::max(0.0, 1.0 - a);
  const bool default_grid = z_grid.empty();
  std::vector<BoundReport> reports;

  // Angular moments.
  {
    BoundReport second{"theta-second-moment", {}, 0.0, true};
    BoundReport first{"theta-first-moment", {}, 0.0, true};
    BoundReport higher{"theta-higher-moments", {}, 0.0, true};
    double m1 = 0.0;
    double m2 = 0.0;
    for (const Atom& at : m.atoms()) {
      m1 += at.weight * at.angle;
      m2 += at.weight * at.angle * at.angle;
    }
    second.add({{"k", 2}}, m2, kPi * kPi / 2.0 * alpha);
    first.add({{"k", 1}}, std::abs(m1), (1.0 + std::pow(kPi, 3) / 12.0) * alpha);
    for (int k = 3; k <= k_max; ++k) {
      double mk = 0.0;
      for (const Atom& at : m.atoms()) mk += at.weight * std::pow(std::abs(at.angle), k);
      higher.add({{"k", k}}, mk, std::pow(kPi, k) / 2.0 * alpha);
    }
    reports.push_back(std::move(second));
    reports.push_back(std::move(first));
    reports.push_back(std::move(higher));
  }

  {
    BoundReport expectations{"expectation-bound", {}, 0.0, true};
    const MomentVector c = measure.moments(k_max);
    for (int k = 1; k <= k_max; ++k) {
      expectations.add({{"k", k}}, std::abs(c[k] - 1.0), 7.0 * k * k * k * alpha);
    }
    reports.push_back(std::move(expectations));
  }

  {
    BoundReport approx{"psi-approximation", {}, 0.0, true};
    const auto grid = default_grid ? polar_grid(0.5, options.radii, options.angles) : z_grid;
    for (Complex z : grid) {
      if (!inside(z, 0.5)) continue;
      const Complex lhs = psi_eval(measure, z) - a * z / (1.0 - z);
      approx.add(z_params(z), std::abs(lhs), 716.0 * alpha * std::norm(z));
    }
    reports.push_back(std::move(approx));
  }

  {
    // |psi| >= a^2/6 on |z| = a/3, reported as a^2/6 <= |psi(z)|.
    BoundReport lower{"psi-lower-bound", {}, 0.0, true};
    const double radius = a / 3.0;
    std::vector<Complex> grid;
    if (default_grid) {
      for (int t = 0; t < options.angles; ++t) grid.push_back(std::polar(radius, -kPi + 2.0 * kPi * t / options.angles));
    } else {
      for (Complex z : z_grid) {
        if (std::abs(std::abs(z) - radius) <= 1e-12 * std::max(1.0, radius)) grid.push_back(z);
      }
    }
    for (Complex z : grid) lower.add(z_params(z), a * a / 6.0, std::abs(psi_eval(measure, z)));
    reports.push_back(std::move(lower));
  }

  {
    BoundReport size{"psi-inverse-size", {}, 0.0, true};
    BoundReport ratio{"psi-inverse-ratio", {}, 0.0, true};
    BoundReport residual{"psi-inverse-residual", {}, 0.0, true};
    const double radius = a * a / 12.0;
    const auto inverse = revert(psi_series(measure, options.revert_order));
    const auto grid = default_grid ? polar_grid(radius, options.radii, options.angles) : z_grid;
    for (Complex z : grid) {
      if (!inside(z, radius)) continue;
      const Complex w = inverse.evaluate(z);
      residual.add(z_params(z), std::abs(psi_eval(measure, w) - z), options.residual_tolerance);
      size.add(z_params(z), std::abs(w), 2.0 / a * std::abs(z));
      if (z != Complex(0.0)) {
        ratio.add(z_params(z), std::abs(w * (a + z) / z - 1.0), 3342.0 / (a * a) * alpha * std::abs(z));
      }
    }
    reports.push_back(std::move(size));
    reports.push_back(std::move(ratio));
    reports.push_back(std::move(residual));
  }
  return reports;
}

BoundReport verify_f_estimate(const SequenceSpec& spec, int n, int K, const std::vector<Complex>& z_grid,
                              const LemmaGridOptions& options) {
  if (n < 1 || K < 1) throw Error(ErrorKind::NotApplicable, "verify_f_estimate needs n >= 1 and K >= 1");
  const std::vector<double> a = positive_means(spec, n, "verify_f_estimate");
  const double a_min = *std::min_element(a.begin(), a.end());
  double alpha_sum = 0.0;
  double product = 1.0;
  for (double ai : a) {
    alpha_sum += 1.0 - ai;
    product *= ai;
  }
  const double radius = a_min * a_min / 6684.0 * std::min(1.0, alpha_sum > 0.0 ? 1.0 / alpha_sum : 1.0);

  std::vector<Complex> grid;
  if (z_grid.empty()) {
    grid.push_back(0.0);
    for (Complex z : polar_grid(radius, options.radii, options.angles)) grid.push_back(z);
  } else {
    for (Complex z : z_grid) {
      if (!inside(z, radius)) {
        throw Error(ErrorKind::NotApplicable,
                    "verify_f_estimate: |z| = " + std::to_string(std::abs(z)) + " exceeds the radius " +
                        std::to_string(radius));
      }
      grid.push_back(z);
    }
  }

  // psi_(n)^{-1}(u) = u / (1 + u) * prod_i S_i(u) on phase-normalized factors.
  const int M = options.revert_order;
  auto s_product = Series::one(M);
  for (int i = 1; i <= n; ++i) {
    const CircleMeasure mi = normalize_phase(spec.measure(i)).measure;
    s_product = mul(s_product, s_series(mi, M));
  }
  auto one_plus_u = Series::one(M);
  one_plus_u[1] = 1.0;
  const Series inverse = mul(multiply_by_z(s_product), reciprocal(one_plus_u));
  const Series psi = revert(inverse);

  BoundReport report;
  report.id = "f-estimate";
  for (Complex z : grid) {
    Complex ratio;
    double residual = 0.0;
    if (z == Complex(0.0)) {
      ratio = 1.0 / inverse[1];
    } else {
      const Complex w = inverse.evaluate(z);
      ratio = z / w;
      residual = std::abs(psi.evaluate(w) - z);
    }
    if (residual > options.residual_tolerance) {
      throw Error(ErrorKind::NotApplicable,
                  "verify_f_estimate: inverse residual " + std::to_string(residual) + " exceeds tolerance");
    }
    for (int k = 1; k <= K; ++k) {
      Params params = z_params(z);
      params.push_back({"n", n});
      params.push_back({"k", k});
      report.add(std::move(params), std::pow(std::abs(ratio), k), std::pow(2.0 * std::exp(2.0) * product, k));
    }
  }
  return report;
}

SumProduct sum_product_relation(const std::vector<double>& a_list) {
  SumProduct out;
  for (double a : a_list) {
    if (!(a > 0.0 && a <= 1.0)) {
      throw Error(ErrorKind::Domain, "sum_product_relation entries must lie in (0, 1], got " + std::to_string(a));
    }
    out.product *= a;
    out.alpha_sum += 1.0 - a;
  }
  out.bound_ok = out.product <= std::exp(-out.alpha_sum) + 1e-12;
  return out;
}

double psi_approximation_constant(int terms) {
  double sum = 0.0;
  for (int k = terms - 1; k >= 0; --k) {
    const double base = k + 2.0;
    sum += (base * base * base + 1.0 / 7.0) * std::ldexp(1.0, -k);
  }
  return 7.0 * sum;
}

}  // namespace freecircle
