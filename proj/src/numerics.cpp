#include "hipi/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace hipi {

namespace {

std::string too_large_message(double required, double cap) {
  std::ostringstream os;
  os << "enumeration needs " << required << " entries but the cap is " << cap
     << "; raise the cap to at least " << required;
  return os.str();
}

}  // namespace

EnumerationTooLarge::EnumerationTooLarge(double required, double cap)
    : std::runtime_error(too_large_message(required, cap)), required_(required), cap_(cap) {}

double sentinel_log_sum_exp(std::span<const double> x, double sentinel) {
  const double threshold = exclusion_threshold(sentinel);
  double max_value = -std::numeric_limits<double>::infinity();
  for (double v : x) {
    if (v > threshold) max_value = std::max(max_value, v);
  }
  if (!std::isfinite(max_value)) return sentinel;
  double sum = 0.0;
  for (double v : x) {
    if (v > threshold) sum += std::exp(v - max_value);
  }
  return max_value + std::log(sum);
}

double sentinel_log_mean_exp(std::span<const double> x, double sentinel) {
  const double lse = sentinel_log_sum_exp(x, sentinel);
  if (lse <= exclusion_threshold(sentinel)) return sentinel;
  return lse - std::log(static_cast<double>(x.size()));
}

std::vector<double> sentinel_softmax(std::span<const double> logits, std::span<const double> weights,
                                     double sentinel, bool* fallback) {
  const double threshold = exclusion_threshold(sentinel);
  const std::size_t n = logits.size();
  std::vector<double> out(n, 0.0);
  double max_value = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    if (logits[i] > threshold && w > 0.0) max_value = std::max(max_value, logits[i]);
  }
  if (fallback) *fallback = false;
  if (!std::isfinite(max_value)) {
    if (fallback) *fallback = true;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += weights.empty() ? 1.0 : weights[i];
    for (std::size_t i = 0; i < n; ++i) {
      const double w = weights.empty() ? 1.0 : weights[i];
      out[i] = total > 0.0 ? w / total : 1.0 / static_cast<double>(n);
    }
    return out;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    if (logits[i] > threshold && w > 0.0) {
      out[i] = w * std::exp(logits[i] - max_value);
      total += out[i];
    }
  }
  for (double& p : out) p /= total;
  return out;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::size_t Rng::uniform_index(std::size_t n) {
  return std::min(n - 1, static_cast<std::size_t>(uniform() * static_cast<double>(n)));
}

std::size_t Rng::categorical(std::span<const double> probs) {
  double total = 0.0;
  for (double p : probs) total += p;
  const double u = uniform() * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    last_positive = i;
    if (u < acc) return i;
  }
  return last_positive;
}

std::vector<double> Rng::dirichlet(std::size_t n, double alpha) {
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<double> out(n);
  double total = 0.0;
  for (double& v : out) {
    v = gamma(engine_);
    total += v;
  }
  if (total <= 0.0) {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(n));
    return out;
  }
  for (double& v : out) v /= total;
  return out;
}

}  // namespace hipi
