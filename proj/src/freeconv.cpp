#include "freecircle/freeconv.hpp"

#include <algorithm>
#include <cstdint>
#include <string>
#include <unordered_map>

namespace freecircle {

namespace {

using Word = std::vector<Letter>;

struct WordHash {
  std::size_t operator()(const Word& w) const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    for (const Letter& l : w) {
      h = (h ^ static_cast<std::uint32_t>(l.factor)) * 1099511628211ull;
      h = (h ^ static_cast<std::uint32_t>(l.power)) * 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
  }
};

// Appends a letter, merging with the top of the stack when the factors
// coincide and popping when the merged power cancels.
void push_merge(Word& stack, const Letter& l) {
  if (!stack.empty() && stack.back().factor == l.factor) {
    stack.back().power += l.power;
    if (stack.back().power == 0) stack.pop_back();
  } else {
    stack.push_back(l);
  }
}

bool rotation_less(const Word& w, std::size_t a, std::size_t b) {
  const std::size_t n = w.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Letter& x = w[(a + i) % n];
    const Letter& y = w[(b + i) % n];
    if (x.factor != y.factor) return x.factor < y.factor;
    if (x.power != y.power) return x.power < y.power;
  }
  return false;
}

// Cyclic reduction followed by the least rotation.
void cyclic_canonicalize(Word& w) {
  while (w.size() >= 2 && w.front().factor == w.back().factor) {
    w.front().power += w.back().power;
    w.pop_back();
    if (w.front().power == 0) w.erase(w.begin());
  }
  if (w.size() < 3) {
    if (w.size() == 2 && rotation_less(w, 1, 0)) std::swap(w[0], w[1]);
    return;
  }
  std::size_t best = 0;
  for (std::size_t s = 1; s < w.size(); ++s) {
    if (rotation_less(w, s, best)) best = s;
  }
  if (best != 0) std::rotate(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(best), w.end());
}

}  // namespace

FreeWord::FreeWord(std::vector<Letter> letters) : letters_(std::move(letters)) {
  for (std::size_t i = 0; i < letters_.size(); ++i) {
    if (letters_[i].power == 0) {
      throw Error(ErrorKind::WordForm, "letter " + std::to_string(i) + " has power 0");
    }
    if (i > 0 && letters_[i].factor == letters_[i - 1].factor) {
      throw Error(ErrorKind::WordForm,
                  "letters " + std::to_string(i - 1) + " and " + std::to_string(i) +
                      " share factor " + std::to_string(letters_[i].factor));
    }
  }
}

FreeWord FreeWord::alternating_power(int first, int second, int k) {
  std::vector<Letter> letters;
  letters.reserve(2 * static_cast<std::size_t>(std::max(k, 0)));
  for (int i = 0; i < k; ++i) {
    letters.push_back({first, 1});
    letters.push_back({second, 1});
  }
  return FreeWord(std::move(letters));
}

struct JointMomentEvaluator::Impl {
  MomentMap measures;
  JointMomentOptions options;
  std::unordered_map<Word, Complex, WordHash> cache;
  std::unordered_map<Word, double, WordHash> count_cache;

  Complex single(const Letter& l) const {
    auto it = measures.find(l.factor);
    if (it == measures.end()) {
      throw Error(ErrorKind::InsufficientOrder, "no moments supplied for factor " + std::to_string(l.factor));
    }
    return it->second[l.power];
  }

  void finish(Word& w) const {
    if (options.cyclic) cyclic_canonicalize(w);
  }

  Complex value(const Word& w) {
    if (w.empty()) return 1.0;
    if (w.size() == 1) return single(w.front());
    if (auto it = cache.find(w); it != cache.end()) return it->second;
    const Complex v = expand(w);
    cache.emplace(w, v);
    return v;
  }

  // Depth-first walk over keep/delete decisions per position. Deleting
  // position i multiplies by -E(A_i); a zero factor prunes the branch.
  struct Walk {
    Impl& self;
    const Word& word;
    std::vector<Complex> singles;
    Word stack;
    Complex total{0.0};

    void run(std::size_t i, Complex coeff, bool any_deleted) {
      if (i == word.size()) {
        if (!any_deleted) return;
        Word rest = stack;
        self.finish(rest);
        total -= coeff * self.value(rest);
        return;
      }
      // keep
      const Letter& l = word[i];
      if (!stack.empty() && stack.back().factor == l.factor) {
        const int before = stack.back().power;
        stack.back().power += l.power;
        if (stack.back().power == 0) {
          stack.pop_back();
          run(i + 1, coeff, any_deleted);
          stack.push_back({l.factor, before});
        } else {
          run(i + 1, coeff, any_deleted);
          stack.back().power = before;
        }
      } else {
        stack.push_back(l);
        run(i + 1, coeff, any_deleted);
        stack.pop_back();
      }
      // delete
      if (singles[i] != Complex(0.0)) run(i + 1, -coeff * singles[i], true);
    }
  };

  Complex expand(const Word& w) {
    Walk walk{*this, w, {}, {}, Complex(0.0)};
    walk.singles.reserve(w.size());
    for (const Letter& l : w) walk.singles.push_back(single(l));
    walk.stack.reserve(w.size());
    // Accumulated coeff is prod(-E(A_k)) = (-1)^r prod E(A_k); the sign
    // (-1)^{r-1} of the recursion is applied by subtracting at the leaves.
    walk.run(0, Complex(1.0), false);
    return walk.total;
  }

  double count(const Word& w) {
    if (w.size() <= 1) return 1.0;
    if (auto it = count_cache.find(w); it != count_cache.end()) return it->second;
    double total = 0.0;
    const std::size_t n = w.size();
    for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
      Word rest;
      for (std::size_t i = 0; i < n; ++i) {
        if (!(mask >> i & 1u)) push_merge(rest, w[i]);
      }
      finish(rest);
      total += count(rest);
    }
    count_cache.emplace(w, total);
    return total;
  }

  Word prepare(const FreeWord& word) const {
    if (static_cast<int>(word.size()) > options.max_letters) {
      throw Error(ErrorKind::ComplexityGuard,
                  "word has " + std::to_string(word.size()) + " letters, cap is " +
                      std::to_string(options.max_letters));
    }
    // Moments needed per factor: the summed |power| bounds every merged letter.
    std::map<int, int> need;
    for (const Letter& l : word.letters()) need[l.factor] += std::abs(l.power);
    for (const auto& [factor, order] : need) {
      auto it = measures.find(factor);
      if (it == measures.end()) {
        throw Error(ErrorKind::InsufficientOrder, "no moments supplied for factor " + std::to_string(factor));
      }
      if (it->second.order() < order) {
        throw Error(ErrorKind::InsufficientOrder,
                    "factor " + std::to_string(factor) + " needs moments through " + std::to_string(order) +
                        ", has " + std::to_string(it->second.order()));
      }
    }
    Word w = word.letters();
    finish(w);
    return w;
  }
};

JointMomentEvaluator::JointMomentEvaluator(MomentMap measures, JointMomentOptions options)
    : impl_(std::make_unique<Impl>()) {
  impl_->measures = std::move(measures);
  impl_->options = options;
}

JointMomentEvaluator::~JointMomentEvaluator() = default;
JointMomentEvaluator::JointMomentEvaluator(JointMomentEvaluator&&) noexcept = default;
JointMomentEvaluator& JointMomentEvaluator::operator=(JointMomentEvaluator&&) noexcept = default;

Complex JointMomentEvaluator::operator()(const FreeWord& word) { return impl_->value(impl_->prepare(word)); }

double JointMomentEvaluator::term_count(const FreeWord& word) {
  return impl_->count(impl_->prepare(word));
}

std::size_t JointMomentEvaluator::cache_size() const { return impl_->cache.size(); }

Complex joint_moment(const FreeWord& word, const MomentMap& measures, const JointMomentOptions& options) {
  JointMomentEvaluator eval(measures, options);
  return eval(word);
}

MomentVector convolve_moments(const MomentVector& m1, const MomentVector& m2, int K,
                              const JointMomentOptions& options) {
  if (K < 1) throw Error(ErrorKind::InsufficientOrder, "convolution order K must be >= 1");
  JointMomentEvaluator eval({{0, m1.truncated(K)}, {1, m2.truncated(K)}}, options);
  Eigen::VectorXcd c(K + 1);
  c[0] = 1.0;
  for (int k = 1; k <= K; ++k) c[k] = eval(FreeWord::alternating_power(0, 1, k));
  return MomentVector(std::move(c));
}

MomentVector convolve_s(const MomentVector& m1, const MomentVector& m2, int K, double threshold) {
  if (K < 1) throw Error(ErrorKind::InsufficientOrder, "convolution order K must be >= 1");
  for (const MomentVector* m : {&m1, &m2}) {
    const double a = std::abs((*m)[1]);
    if (a == 0.0 || a < threshold) {
      throw Error(ErrorKind::STransformUndefined,
                  "S-transform undefined: |E(X)| = " + std::to_string(a) + " is below the conditioning threshold");
    }
  }
  if (K == 1) {
    Eigen::VectorXcd c(2);
    c << 1.0, m1[1] * m2[1];
    return MomentVector(std::move(c));
  }
  // Extended precision: reversion amplifies rounding by about |c1|^(1 - 2K).
  using Wide = std::complex<long double>;
  using WideSeries = TruncatedSeries<Wide>;
  const int S_order = K - 1;
  const auto s1 = s_series<Wide>(CircleMeasure(m1.truncated(K)), S_order, threshold);
  const auto s2 = s_series<Wide>(CircleMeasure(m2.truncated(K)), S_order, threshold);
  // psi^{-1}(u) = u S(u) / (1 + u)
  auto one_plus_u = WideSeries::one(K);
  one_plus_u[1] = 1.0L;
  const WideSeries inverse = mul(multiply_by_z(mul(s1, s2).with_order(K)), reciprocal(one_plus_u));
  const Series psi = revert(inverse).cast<Complex>();
  Eigen::VectorXcd c(K + 1);
  c[0] = 1.0;
  for (int k = 1; k <= K; ++k) c[k] = psi[k];
  return MomentVector(std::move(c));
}

std::vector<ProductStep> product_steps(const std::vector<MomentVector>& seq, int K, double route_threshold,
                                       const JointMomentOptions& options) {
  std::vector<ProductStep> out;
  out.reserve(seq.size());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const MomentVector next = seq[i].truncated(K);
    if (i == 0) {
      out.push_back({next, ConvolutionRoute::JointMoment});
      continue;
    }
    const MomentVector& acc = out.back().moments;
    const bool s_route = std::abs(acc[1]) >= route_threshold && std::abs(next[1]) >= route_threshold;
    if (s_route) {
      out.push_back({convolve_s(acc, next, K, route_threshold), ConvolutionRoute::STransform});
    } else {
      out.push_back({convolve_moments(acc, next, K, options), ConvolutionRoute::JointMoment});
    }
  }
  return out;
}

std::vector<MomentVector> product_moments(const std::vector<MomentVector>& seq, int K, double route_threshold,
                                          const JointMomentOptions& options) {
  std::vector<MomentVector> out;
  for (ProductStep& step : product_steps(seq, K, route_threshold, options)) out.push_back(std::move(step.moments));
  return out;
}

}  // namespace freecircle
