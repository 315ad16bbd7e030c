#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "warpmix/types.hpp"

namespace testutil {

inline Eigen::VectorXd random_simplex(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> unif(0.2, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = unif(rng);
  return v / v.sum();
}

/* Random valid model with all table cells bounded away from zero. */
inline warpmix::WarpMixtureModel random_model(std::mt19937_64& rng, int clusters, int max_shift,
                                              int max_skip, int grid_len, int dims,
                                              bool allow_stay, bool tied, bool offsets) {
  warpmix::WarpMixtureModel m;
  m.allow_stay = allow_stay;
  m.tie_transitions = tied;
  m.offsets_enabled = offsets;
  m.weights = random_simplex(rng, clusters);
  m.init_dist.resize(clusters, max_shift);
  for (int k = 0; k < clusters; ++k)
    m.init_dist.row(k) = random_simplex(rng, max_shift).transpose();

  std::uniform_real_distribution<double> mean_dist(-2.0, 2.0);
  std::uniform_real_distribution<double> var_dist(0.3, 1.5);
  const int n_off = max_skip + 2;
  const int rows = tied ? 1 : grid_len;
  for (int k = 0; k < clusters; ++k) {
    Eigen::MatrixXd step = Eigen::MatrixXd::Zero(rows, n_off);
    for (int r = 0; r < rows; ++r) {
      Eigen::VectorXd probs = random_simplex(rng, allow_stay ? n_off : n_off - 1);
      int at = 0;
      for (int o = 0; o < n_off; ++o)
        if (o != 0 || allow_stay) step(r, o) = probs(at++);
    }
    m.step_dist.push_back(step);
    Eigen::MatrixXd mu(grid_len, dims), var(grid_len, dims);
    for (int t = 0; t < grid_len; ++t)
      for (int d = 0; d < dims; ++d) {
        mu(t, d) = mean_dist(rng);
        var(t, d) = var_dist(rng);
      }
    m.means.push_back(mu);
    m.vars.push_back(var);
  }
  return m;
}

inline warpmix::Curve random_curve(std::mt19937_64& rng, int length, int dims,
                                   const std::string& id = "test") {
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  warpmix::Curve c;
  c.id = id;
  c.points.resize(length, dims);
  for (int j = 0; j < length; ++j)
    for (int d = 0; d < dims; ++d) c.points(j, d) = unif(rng);
  return c;
}

inline double scalar_normal_logpdf(double y, double mean, double var) {
  return -0.5 * std::log(2.0 * M_PI * var) - (y - mean) * (y - mean) / (2.0 * var);
}

/* Reference Gaussian mixture with trailing measurements treated as missing:
 * component k scores observation j against grid cell j, curves shorter than
 * the grid simply skip the tail. Written without the path machinery. */
inline double gmm_missing_loglik(const warpmix::Curve& curve,
                                 const warpmix::WarpMixtureModel& model) {
  std::vector<double> terms(model.components());
  for (int k = 0; k < model.components(); ++k) {
    double t = std::log(model.weights(k));
    for (Eigen::Index j = 0; j < curve.length(); ++j)
      for (Eigen::Index d = 0; d < curve.dims(); ++d)
        t += scalar_normal_logpdf(curve.points(j, d), model.means[k](j, d),
                                  model.vars[k](j, d));
    terms[k] = t;
  }
  double hi = terms[0];
  for (double t : terms) hi = std::max(hi, t);
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - hi);
  return hi + std::log(acc);
}

/* Exhaustive joint scorer, duplicating the generative semantics directly from
 * the tables: renormalizes step rows over in-grid offsets, pairs observation j
 * with path position j, subtracts the per-(k, g1) mean-of-differences offset
 * when the model calls for one. Visits every (k, g1, path) triple. */
template <typename Visit>
void for_each_assignment(const warpmix::Curve& curve, const warpmix::WarpMixtureModel& model,
                         const Visit& visit) {
  const int len = static_cast<int>(curve.length());
  const int t_len = model.grid_len();
  const int n_off = model.max_skip() + 2;
  for (int k = 0; k < model.components(); ++k) {
    for (int g1 = 0; g1 < model.max_shift(); ++g1) {
      Eigen::MatrixXd x = curve.points;
      if (model.offsets_enabled) {
        const Eigen::VectorXd delta =
            (curve.points - model.means[k].middleRows(g1, len)).colwise().mean().transpose();
        x.rowwise() -= delta.transpose();
      }
      std::vector<int> path(len);
      const double base = std::log(model.weights(k)) + std::log(model.init_dist(k, g1));

      auto emit = [&](int j, int t) {
        double e = 0.0;
        for (Eigen::Index d = 0; d < x.cols(); ++d)
          e += scalar_normal_logpdf(x(j, d), model.means[k](t, d), model.vars[k](t, d));
        return e;
      };
      auto step_logprob = [&](int t, int o) {
        const auto row = model.step_dist[k].row(model.tie_transitions ? 0 : t);
        double denom = 0.0;
        for (int oo = 0; oo < n_off; ++oo)
          if (model.offset_supported(oo) && t + oo < t_len) denom += row(oo);
        if (!(row(o) > 0.0) || denom <= 0.0) return -std::numeric_limits<double>::infinity();
        return std::log(row(o)) - std::log(denom);
      };

      auto walk = [&](auto&& self, int j, int t, double lp) -> void {
        path[j] = t;
        if (j + 1 == len) {
          visit(k, g1, path, lp);
          return;
        }
        for (int o = 0; o < n_off; ++o) {
          if (!model.offset_supported(o) || t + o >= t_len) continue;
          const double ls = step_logprob(t, o);
          if (ls == -std::numeric_limits<double>::infinity()) continue;
          self(self, j + 1, t + o, lp + ls + emit(j + 1, t + o));
        }
      };
      walk(walk, 0, g1, base + emit(0, g1));
    }
  }
}

}  // namespace testutil
