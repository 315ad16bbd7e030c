#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>

namespace warpmix {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

/* log(exp(a) + exp(b)) without leaving the log domain. */
inline double log_add(double a, double b) {
  if (a == neg_inf) return b;
  if (b == neg_inf) return a;
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

/* log sum of exponentials of an Eigen expression; -inf for an all -inf input. */
template <typename Derived>
double log_sum_exp(const Eigen::DenseBase<Derived>& xs) {
  if (xs.size() == 0) return neg_inf;
  const double hi = xs.maxCoeff();
  if (hi == neg_inf) return neg_inf;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < xs.size(); ++i)
    acc += std::exp(xs.derived()(i) - hi);
  return hi + std::log(acc);
}

/* Diagonal-Gaussian log density, dimensions summed. Expression-friendly:
 * accepts any three conforming vector expressions. */
template <typename Y, typename M, typename V>
double gaussian_logdensity(const Eigen::DenseBase<Y>& y, const Eigen::DenseBase<M>& mean,
                           const Eigen::DenseBase<V>& var) {
  constexpr double log_two_pi = 1.8378770664093454835606594728112;
  double acc = 0.0;
  for (Eigen::Index d = 0; d < y.size(); ++d) {
    const double r = y.derived()(d) - mean.derived()(d);
    const double v = var.derived()(d);
    acc += -0.5 * (log_two_pi + std::log(v)) - r * r / (2.0 * v);
  }
  return acc;
}

}  // namespace warpmix
