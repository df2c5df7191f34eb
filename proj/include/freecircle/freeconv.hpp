#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <vector>

#include "freecircle/measure.hpp"

namespace freecircle {

// |c1| at or above which product_moments takes the S-transform route.
inline constexpr double kRouteThreshold = 1e-3;

inline constexpr int kDefaultMaxLetters = 24;

struct Letter {
  int factor = 0;
  int power = 0;  // nonzero; negative powers are adjoints

  friend bool operator==(const Letter&, const Letter&) = default;
};

// Alternating product X_{i1}^{p1} X_{i2}^{p2} ... of free unitaries.
class FreeWord {
 public:
  FreeWord() = default;
  explicit FreeWord(std::vector<Letter> letters);

  // (X_first X_second)^k
  static FreeWord alternating_power(int first, int second, int k);

  const std::vector<Letter>& letters() const { return letters_; }
  std::size_t size() const { return letters_.size(); }

 private:
  std::vector<Letter> letters_;
};

using MomentMap = std::map<int, MomentVector>;

struct JointMomentOptions {
  int max_letters = kDefaultMaxLetters;
  // Use traciality of the expectation: sub-words are reduced cyclically and
  // memoized under their least rotation. Off means plain linear reduction.
  bool cyclic = true;
};

// Evaluates E(word) by the subset-deletion recursion
//   E(A_1...A_n) = sum_{S nonempty} (-1)^{|S|-1} prod_{k in S} E(A_k) E(word without S),
// memoizing reduced sub-words. One evaluator is tied to one set of measures.
class JointMomentEvaluator {
 public:
  explicit JointMomentEvaluator(MomentMap measures, JointMomentOptions options = {});
  ~JointMomentEvaluator();
  JointMomentEvaluator(JointMomentEvaluator&&) noexcept;
  JointMomentEvaluator& operator=(JointMomentEvaluator&&) noexcept;

  Complex operator()(const FreeWord& word);

  // Number of product terms in the fully expanded recursion (no zero
  // pruning). Grows exponentially; returned as a double.
  double term_count(const FreeWord& word);

  std::size_t cache_size() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

Complex joint_moment(const FreeWord& word, const MomentMap& measures,
                     const JointMomentOptions& options = {});

// Moments of mu1 [x] mu2 through K by the recursion on (XY)^k. Valid for
// every pair of measures, including zero-mean ones.
MomentVector convolve_moments(const MomentVector& m1, const MomentVector& m2, int K,
                              const JointMomentOptions& options = {});

// Same through S-transform multiplication; both |c1| must reach `threshold`.
MomentVector convolve_s(const MomentVector& m1, const MomentVector& m2, int K,
                        double threshold = kSConditioningThreshold);

enum class ConvolutionRoute { STransform, JointMoment };

struct ProductStep {
  MomentVector moments;
  ConvolutionRoute route;  // route used to fold this factor in
};

// Partial products mu^(1), ..., mu^(n) by left folding.
std::vector<ProductStep> product_steps(const std::vector<MomentVector>& seq, int K,
                                       double route_threshold = kRouteThreshold,
                                       const JointMomentOptions& options = {});

std::vector<MomentVector> product_moments(const std::vector<MomentVector>& seq, int K,
                                          double route_threshold = kRouteThreshold,
                                          const JointMomentOptions& options = {});

}  // namespace freecircle
