#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "freecircle/freeconv.hpp"
#include "freecircle/measure.hpp"

namespace freecircle {

// Analytic knowledge about whether sum_k (1 - a_k) diverges.
enum class TailBehavior { Diverges, Converges, Unknown };

// How the Bernoulli parameter p_k is generated for positions past the prefix.
// Positions are 1-based over the whole sequence, prefix included.
struct BernoulliRule {
  enum class Form {
    Constant,             // p_k = p
    COverKPowS,           // p_k = (1 + c k^-s) / 2, a_k = c k^-s
    OneMinusCOverKPowS,   // p_k = 1 - c k^-s,       a_k = 1 - 2 c k^-s
    Explicit,             // p_k from a finite list after the prefix
  };

  Form form = Form::Constant;
  double p = 0.5;
  double c = 0.0;
  double s = 0.0;
  std::vector<double> p_list;

  // p for 1-based position k, where `offset` positions precede the rule.
  double p_at(int k, int offset) const;
};

// A sequence of circle measures mu_1, mu_2, ... together with tail metadata.
class SequenceSpec {
 public:
  enum class Kind { Explicit, BernoulliRule, Repeated };

  static SequenceSpec explicit_list(std::vector<CircleMeasure> measures,
                                    TailBehavior tail = TailBehavior::Unknown);
  static SequenceSpec bernoulli_rule(BernoulliRule rule, std::vector<CircleMeasure> prefix,
                                     TailBehavior tail);
  static SequenceSpec repeated(CircleMeasure measure, TailBehavior tail = TailBehavior::Unknown);

  Kind kind() const { return kind_; }
  TailBehavior tail() const { return tail_; }
  const std::vector<CircleMeasure>& prefix() const { return prefix_; }
  const std::optional<BernoulliRule>& rule() const { return rule_; }

  // Number of measures, or nullopt for infinite sequences.
  std::optional<int> length() const;

  // mu_i for 1-based i.
  CircleMeasure measure(int i) const;

  // Same sequence with mu_i replaced by rotate(mu_i, angles[i-1]) for the
  // first angles.size() positions. Kind and tail metadata are kept.
  SequenceSpec rotated(std::vector<double> angles) const;

 private:
  SequenceSpec(Kind kind, std::vector<CircleMeasure> prefix, std::optional<BernoulliRule> rule,
               TailBehavior tail);

  Kind kind_;
  std::vector<CircleMeasure> prefix_;
  std::optional<BernoulliRule> rule_;
  TailBehavior tail_;
  std::vector<double> phases_;
};

enum class CaseLabel { I, II, III_1, III_2, IV_1, IV_2, IV_3 };

const char* to_string(CaseLabel label);

struct ClassificationResult {
  CaseLabel label = CaseLabel::I;
  bool converges_to_uniform = false;
  // True when the product limit could not be settled at the horizon; the
  // label then reports the numerically favored branch.
  bool indeterminate = false;
  // Where the product-limit decision came from: "none", "tail-flag",
  // "analytic", "numeric" or "favored".
  std::string product_evidence = "none";
  std::vector<int> zero_mean_indices;          // 1-based
  std::vector<std::pair<std::string, double>> witnesses;
  std::vector<double> normalization_angles;    // per factor, within the horizon
  int horizon = 0;
};

struct ClassifyOptions {
  double product_zero_tolerance = 1e-8;
  double cauchy_tolerance = 1e-10;
  int uniformity_order = 32;
};

ClassificationResult classify(const SequenceSpec& spec, int horizon, const ClassifyOptions& options = {});

// Uniform flag or all moments through `order` below 1e-12 in modulus.
bool looks_uniform(const CircleMeasure& m, int order);

struct DiagnosticRow {
  int n = 0;
  double max_moment = 0.0;  // max_{1<=k<=K} |c_k^(n)|
};

std::vector<DiagnosticRow> diagnose(const SequenceSpec& spec, int n_max, int K,
                                    const JointMomentOptions& options = {});

bool empirically_converging(const std::vector<DiagnosticRow>& table, double tolerance);

struct BoundPoint {
  std::vector<std::pair<std::string, double>> params;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  // rhs - lhs
};

// Evaluated sides of `lhs <= rhs` over a grid.
struct BoundReport {
  std::string id;
  std::vector<BoundPoint> points;
  double min_margin = 0.0;
  bool pass = true;

  void add(std::vector<std::pair<std::string, double>> params, double lhs, double rhs);
};

inline constexpr double kMarginTolerance = 1e-12;
inline constexpr double kCkConstant = 131072.0;  // 2^17

BoundReport check_ck_bound(const SequenceSpec& spec, int n, int K);

struct LemmaGridOptions {
  int angles = 32;
  int radii = 8;
  // Truncation order used to revert psi for the inverse-function bounds.
  int revert_order = 48;
  double residual_tolerance = 1e-9;
};

// Checks each explicit single-measure inequality on m (first moment real in
// (0, 1]). An empty z_grid selects the default grid for every lemma domain.
std::vector<BoundReport> verify_lemma_bounds(const AtomicMeasure& m, const std::vector<Complex>& z_grid,
                                             int k_max, const LemmaGridOptions& options = {});

BoundReport verify_f_estimate(const SequenceSpec& spec, int n, int K, const std::vector<Complex>& z_grid,
                              const LemmaGridOptions& options = {});

struct SumProduct {
  double product = 1.0;
  double alpha_sum = 0.0;
  bool bound_ok = true;  // product <= exp(-alpha_sum) + 1e-12
};

SumProduct sum_product_relation(const std::vector<double>& a_list);

// 7 * sum_{k=0}^{terms-1} ((k+2)^3 + 1/7) 2^-k
double psi_approximation_constant(int terms);

}  // namespace freecircle
