#pragma once

#include <string>
#include <vector>

#include "freecircle/limits.hpp"

namespace freecircle::testing {

struct CorpusSpec {
  std::string name;
  SequenceSpec spec;
  CaseLabel label;
  bool converges;
};

inline BernoulliRule constant_rule(double p) {
  BernoulliRule r;
  r.form = BernoulliRule::Form::Constant;
  r.p = p;
  return r;
}

// a_k = 1 - 2c k^-s
inline BernoulliRule one_minus_rule(double c, double s) {
  BernoulliRule r;
  r.form = BernoulliRule::Form::OneMinusCOverKPowS;
  r.c = c;
  r.s = s;
  return r;
}

// a_k = c k^-s
inline BernoulliRule c_over_rule(double c, double s) {
  BernoulliRule r;
  r.form = BernoulliRule::Form::COverKPowS;
  r.c = c;
  r.s = s;
  return r;
}

// One sequence per case of the classification. Rule positions count the
// prefix, so "a_k = 1 - 1/k^2" applies from k = 2 behind a one-measure prefix.
inline std::vector<CorpusSpec> case_corpus() {
  const CircleMeasure half = AtomicMeasure::bernoulli(0.5);
  const CircleMeasure b9 = AtomicMeasure::bernoulli(0.9);
  return {
      {"I", SequenceSpec::bernoulli_rule(one_minus_rule(0.5, 2.0), {b9}, TailBehavior::Converges), CaseLabel::I,
       false},
      {"II", SequenceSpec::bernoulli_rule(constant_rule(0.9), {half, half}, TailBehavior::Diverges), CaseLabel::II,
       true},
      {"III.1", SequenceSpec::bernoulli_rule(c_over_rule(0.9, 1.0), {}, TailBehavior::Diverges), CaseLabel::III_1,
       true},
      {"III.2", SequenceSpec::bernoulli_rule(constant_rule(0.9), {}, TailBehavior::Diverges), CaseLabel::III_2, true},
      {"IV.1", SequenceSpec::bernoulli_rule(constant_rule(0.9), {CircleMeasure::uniform()}, TailBehavior::Diverges),
       CaseLabel::IV_1, true},
      {"IV.2", SequenceSpec::bernoulli_rule(constant_rule(0.9), {half}, TailBehavior::Diverges), CaseLabel::IV_2,
       true},
      {"IV.3", SequenceSpec::bernoulli_rule(one_minus_rule(0.5, 2.0), {half}, TailBehavior::Converges),
       CaseLabel::IV_3, false},
  };
}

}  // namespace freecircle::testing
