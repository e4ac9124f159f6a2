#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hipi {

/// Stand-in for a -inf reward. Finite so that log-sum-exp never sees IEEE infinities.
inline constexpr double kDefaultSentinel = -1e9;

/// Values at or below this fraction of the sentinel count as "minus infinity".
inline constexpr double kExclusionFraction = 0.1;

inline constexpr double exclusion_threshold(double sentinel) { return kExclusionFraction * sentinel; }

class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class EnumerationTooLarge : public std::runtime_error {
 public:
  EnumerationTooLarge(double required, double cap);
  double required() const { return required_; }
  double cap() const { return cap_; }

 private:
  double required_;
  double cap_;
};

class UnsupportedStrategy : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Execution { kSerial, kParallel };

/// log(sum(exp(x))) over entries strictly above `threshold`. Returns `sentinel` when
/// every entry is excluded.
double sentinel_log_sum_exp(std::span<const double> x, double sentinel);

/// log of the mean of exp(x) over non-excluded entries, divided by the full length.
/// Returns `sentinel` when every entry is excluded.
double sentinel_log_mean_exp(std::span<const double> x, double sentinel);

/// Normalized softmax of `logits + log(weights)`. Entries whose logit is excluded or
/// whose weight is zero get probability 0. `fallback` is set when nothing survives,
/// in which case the weights themselves (or uniform, if they are all zero) are returned.
std::vector<double> sentinel_softmax(std::span<const double> logits, std::span<const double> weights,
                                     double sentinel, bool* fallback);

/// SplitMix64 step; used to derive independent per-item seeds from one base seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// Seeded random stream. Sampling routines avoid std distributions whose output is
/// implementation defined, except the gamma draws used for Dirichlet rows.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform();  // [0, 1)
  std::size_t uniform_index(std::size_t n);
  std::size_t categorical(std::span<const double> probs);
  std::vector<double> dirichlet(std::size_t n, double alpha);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace hipi
