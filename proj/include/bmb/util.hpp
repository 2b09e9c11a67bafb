#pragma once

#include <cmath>
#include <stdexcept>

namespace bmb {

inline double sigmoid(double f) {
  if (f >= 0.0) return 1.0 / (1.0 + std::exp(-f));
  const double e = std::exp(f);
  return e / (1.0 + e);
}

// log sigmoid(f), stable for large |f|.
inline double log_sigmoid(double f) {
  if (f >= 0.0) return -std::log1p(std::exp(-f));
  return f - std::log1p(std::exp(f));
}

inline double logit(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("logit: p must be in (0,1)");
  return std::log(p) - std::log1p(-p);
}

// Entropy of a Bernoulli(m) variable in nats; 0 log 0 = 0.
inline double binary_entropy(double m) {
  double h = 0.0;
  if (m > 0.0) h -= m * std::log(m);
  if (m < 1.0) h -= (1.0 - m) * std::log1p(-m);
  return h;
}

}  // namespace bmb
