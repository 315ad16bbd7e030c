#include "warpmix/inference.hpp"

#include <cmath>

#include "warpmix/numeric.hpp"

namespace warpmix {

namespace {

/* Inclusive range of grid positions observation j can occupy on a legal path
 * from g1. The upper bound also requires that the remaining observations
 * still fit on the grid, so dead-end states are never materialized. */
struct Window {
  std::vector<int> lo, hi;
  bool ok = false;
};

Window make_window(int g1, int len, int t_len, int min_step, int max_step) {
  Window w;
  w.lo.resize(len);
  w.hi.resize(len);
  for (int j = 0; j < len; ++j) {
    w.lo[j] = g1 + j * min_step;
    int hi = std::min(t_len - 1, g1 + j * max_step);
    hi = std::min(hi, t_len - 1 - (len - 1 - j) * min_step);
    w.hi[j] = hi;
    if (w.lo[j] > w.hi[j]) return w;
  }
  w.ok = true;
  return w;
}

double emit_at(const Eigen::MatrixXd& x, const WarpMixtureModel& m, int k, int j, int t) {
  return gaussian_logdensity(x.row(j), m.means[k].row(t), m.vars[k].row(t));
}

/* Forward log messages over the window rows. Returns the rows; empty when no
 * legal path exists. */
std::vector<Eigen::VectorXd> forward_messages(const Eigen::MatrixXd& x,
                                              const WarpMixtureModel& m, int k, int g1,
                                              const Eigen::MatrixXd& log_steps,
                                              const Window& w) {
  const int len = static_cast<int>(x.rows());
  const int n_off = static_cast<int>(log_steps.cols());
  std::vector<Eigen::VectorXd> la(len);
  la[0] = Eigen::VectorXd::Constant(w.hi[0] - w.lo[0] + 1, neg_inf);
  la[0](g1 - w.lo[0]) = emit_at(x, m, k, 0, g1);
  for (int j = 1; j < len; ++j) {
    la[j] = Eigen::VectorXd::Constant(w.hi[j] - w.lo[j] + 1, neg_inf);
    for (int t = w.lo[j]; t <= w.hi[j]; ++t) {
      double acc = neg_inf;
      for (int o = 0; o < n_off; ++o) {
        const int prev = t - o;
        if (prev < w.lo[j - 1] || prev > w.hi[j - 1]) continue;
        const double ls = log_steps(prev, o);
        if (ls == neg_inf) continue;
        acc = log_add(acc, la[j - 1](prev - w.lo[j - 1]) + ls);
      }
      if (acc != neg_inf) la[j](t - w.lo[j]) = acc + emit_at(x, m, k, j, t);
    }
  }
  return la;
}

Eigen::MatrixXd translate(const Curve& curve, const WarpMixtureModel& model, int k, int g1) {
  if (!model.offsets_enabled) return curve.points;
  const OffsetResult off = optimal_offset(curve, model, k, g1);
  return curve.points.rowwise() - off.delta.transpose();
}

}  // namespace

double emission_logdensity(const Eigen::VectorXd& y, const Eigen::VectorXd& mean,
                           const Eigen::VectorXd& var) {
  if (!y.allFinite() || !mean.allFinite() || !var.allFinite())
    throw DataError("emission_logdensity: non-finite input");
  return gaussian_logdensity(y, mean, var);
}

Eigen::MatrixXd renormalized_log_steps(const WarpMixtureModel& model, int k) {
  const int t_len = model.grid_len();
  const int n_off = model.max_skip() + 2;
  Eigen::MatrixXd out = Eigen::MatrixXd::Constant(t_len, n_off, neg_inf);
  for (int t = 0; t < t_len; ++t) {
    const auto row = model.step_dist[k].row(model.tie_transitions ? 0 : t);
    double denom = 0.0;
    for (int o = 0; o < n_off; ++o)
      if (model.offset_supported(o) && t + o < t_len) denom += row(o);
    if (denom <= 0.0) continue;
    const double log_denom = std::log(denom);
    for (int o = 0; o < n_off; ++o)
      if (model.offset_supported(o) && t + o < t_len && row(o) > 0.0)
        out(t, o) = std::log(row(o)) - log_denom;
  }
  return out;
}

double conditional_loglik(const Eigen::MatrixXd& translated, const WarpMixtureModel& model,
                          int k, int g1, const Eigen::MatrixXd& log_steps) {
  const int len = static_cast<int>(translated.rows());
  const int min_step = model.allow_stay ? 0 : 1;
  const Window w = make_window(g1, len, model.grid_len(), min_step, model.max_skip() + 1);
  if (!w.ok) return neg_inf;

  // Rolling two-row forward recursion; posteriors are not needed here.
  Eigen::VectorXd prev =
      Eigen::VectorXd::Constant(w.hi[0] - w.lo[0] + 1, neg_inf);
  prev(g1 - w.lo[0]) = emit_at(translated, model, k, 0, g1);
  const int n_off = static_cast<int>(log_steps.cols());
  for (int j = 1; j < len; ++j) {
    Eigen::VectorXd cur = Eigen::VectorXd::Constant(w.hi[j] - w.lo[j] + 1, neg_inf);
    for (int t = w.lo[j]; t <= w.hi[j]; ++t) {
      double acc = neg_inf;
      for (int o = 0; o < n_off; ++o) {
        const int p = t - o;
        if (p < w.lo[j - 1] || p > w.hi[j - 1]) continue;
        const double ls = log_steps(p, o);
        if (ls == neg_inf) continue;
        acc = log_add(acc, prev(p - w.lo[j - 1]) + ls);
      }
      if (acc != neg_inf) cur(t - w.lo[j]) = acc + emit_at(translated, model, k, j, t);
    }
    prev.swap(cur);
  }
  return log_sum_exp(prev);
}

WindowedPosteriors conditional_posteriors(const Eigen::MatrixXd& translated,
                                          const WarpMixtureModel& model, int k, int g1,
                                          const Eigen::MatrixXd& log_steps) {
  WindowedPosteriors out;
  const int len = static_cast<int>(translated.rows());
  const int n_off = static_cast<int>(log_steps.cols());
  const int min_step = model.allow_stay ? 0 : 1;
  const Window w = make_window(g1, len, model.grid_len(), min_step, model.max_skip() + 1);
  out.xi = Eigen::MatrixXd::Zero(model.tie_transitions ? 1 : model.grid_len(), n_off);
  if (!w.ok) return out;

  const auto la = forward_messages(translated, model, k, g1, log_steps, w);
  out.loglik = log_sum_exp(la[len - 1]);
  if (out.loglik == neg_inf) return WindowedPosteriors{neg_inf, {}, {}, out.xi};

  // Backward messages over the same windows.
  std::vector<Eigen::VectorXd> lb(len);
  lb[len - 1] = Eigen::VectorXd::Zero(w.hi[len - 1] - w.lo[len - 1] + 1);
  for (int j = len - 2; j >= 0; --j) {
    lb[j] = Eigen::VectorXd::Constant(w.hi[j] - w.lo[j] + 1, neg_inf);
    for (int t = w.lo[j]; t <= w.hi[j]; ++t) {
      double acc = neg_inf;
      for (int o = 0; o < n_off; ++o) {
        const int next = t + o;
        if (next < w.lo[j + 1] || next > w.hi[j + 1]) continue;
        const double ls = log_steps(t, o);
        if (ls == neg_inf) continue;
        acc = log_add(acc, ls + emit_at(translated, model, k, j + 1, next) +
                               lb[j + 1](next - w.lo[j + 1]));
      }
      lb[j](t - w.lo[j]) = acc;
    }
  }

  out.row_lo = w.lo;
  out.gamma_rows.resize(len);
  for (int j = 0; j < len; ++j)
    out.gamma_rows[j] = ((la[j] + lb[j]).array() - out.loglik).exp().matrix();

  for (int j = 0; j + 1 < len; ++j) {
    for (int t = w.lo[j]; t <= w.hi[j]; ++t) {
      const double fa = la[j](t - w.lo[j]);
      if (fa == neg_inf) continue;
      for (int o = 0; o < n_off; ++o) {
        const int next = t + o;
        if (next < w.lo[j + 1] || next > w.hi[j + 1]) continue;
        const double ls = log_steps(t, o);
        if (ls == neg_inf) continue;
        const double lp = fa + ls + emit_at(translated, model, k, j + 1, next) +
                          lb[j + 1](next - w.lo[j + 1]) - out.loglik;
        out.xi(model.tie_transitions ? 0 : t, o) += std::exp(lp);
      }
    }
  }
  return out;
}

double conditional_curve_loglik(const Curve& curve, const WarpMixtureModel& model, int k,
                                int g1) {
  const Eigen::MatrixXd x = translate(curve, model, k, g1);
  return conditional_loglik(x, model, k, g1, renormalized_log_steps(model, k));
}

std::pair<Occupancies, double> forward_backward(const Curve& curve,
                                                const WarpMixtureModel& model, int k, int g1) {
  const Eigen::MatrixXd x = translate(curve, model, k, g1);
  const WindowedPosteriors wp =
      conditional_posteriors(x, model, k, g1, renormalized_log_steps(model, k));
  Occupancies occ;
  occ.gamma = Eigen::MatrixXd::Zero(curve.length(), model.grid_len());
  occ.xi = wp.xi;
  for (size_t j = 0; j < wp.gamma_rows.size(); ++j)
    occ.gamma.row(j).segment(wp.row_lo[j], wp.gamma_rows[j].size()) =
        wp.gamma_rows[j].transpose();
  return {occ, wp.loglik};
}

CutsetPosterior cutset_posterior(const Curve& curve, const WarpMixtureModel& model) {
  const int k_count = model.components();
  const int m_count = model.max_shift();
  Eigen::MatrixXd lw(k_count, m_count);
  for (int k = 0; k < k_count; ++k) {
    const Eigen::MatrixXd log_steps = renormalized_log_steps(model, k);
    for (int g1 = 0; g1 < m_count; ++g1) {
      const Eigen::MatrixXd x = translate(curve, model, k, g1);
      lw(k, g1) = std::log(model.weights(k)) + std::log(model.init_dist(k, g1)) +
                  conditional_loglik(x, model, k, g1, log_steps);
    }
  }
  CutsetPosterior out;
  out.log_evidence = log_sum_exp(lw.reshaped());
  if (out.log_evidence == neg_inf)
    throw DataError("curve '" + curve.id + "' has zero probability under the model");
  out.table = (lw.array() - out.log_evidence).exp().matrix();
  return out;
}

double curve_loglik(const Curve& curve, const WarpMixtureModel& model) {
  return cutset_posterior(curve, model).log_evidence;
}

namespace {

struct ViterbiPath {
  double log_joint = neg_inf;  // emissions + renormalized steps only
  std::vector<int> path;
};

/* Max-product backward pass plus a greedy forward reconstruction that prefers
 * the smallest next position among optimal continuations, which yields the
 * lexicographically earliest optimal path. */
ViterbiPath viterbi_conditional(const Eigen::MatrixXd& x, const WarpMixtureModel& model, int k,
                                int g1, const Eigen::MatrixXd& log_steps) {
  ViterbiPath out;
  const int len = static_cast<int>(x.rows());
  const int n_off = static_cast<int>(log_steps.cols());
  const int min_step = model.allow_stay ? 0 : 1;
  const Window w = make_window(g1, len, model.grid_len(), min_step, model.max_skip() + 1);
  if (!w.ok) return out;

  std::vector<Eigen::VectorXd> best(len);
  best[len - 1] = Eigen::VectorXd::Zero(w.hi[len - 1] - w.lo[len - 1] + 1);
  for (int j = len - 2; j >= 0; --j) {
    best[j] = Eigen::VectorXd::Constant(w.hi[j] - w.lo[j] + 1, neg_inf);
    for (int t = w.lo[j]; t <= w.hi[j]; ++t) {
      double b = neg_inf;
      for (int o = 0; o < n_off; ++o) {
        const int next = t + o;
        if (next < w.lo[j + 1] || next > w.hi[j + 1]) continue;
        const double ls = log_steps(t, o);
        if (ls == neg_inf) continue;
        b = std::max(b, ls + emit_at(x, model, k, j + 1, next) +
                            best[j + 1](next - w.lo[j + 1]));
      }
      best[j](t - w.lo[j]) = b;
    }
  }

  out.log_joint = emit_at(x, model, k, 0, g1) + best[0](g1 - w.lo[0]);
  if (out.log_joint == neg_inf) return out;

  out.path.resize(len);
  out.path[0] = g1;
  int t = g1;
  for (int j = 0; j + 1 < len; ++j) {
    const double target = best[j](t - w.lo[j]);
    for (int o = 0; o < n_off; ++o) {
      const int next = t + o;
      if (next < w.lo[j + 1] || next > w.hi[j + 1]) continue;
      const double ls = log_steps(t, o);
      if (ls == neg_inf) continue;
      // Candidates are rebuilt with the exact expression used above, so the
      // stored max is reproduced bitwise by at least one of them.
      if (ls + emit_at(x, model, k, j + 1, next) + best[j + 1](next - w.lo[j + 1]) == target) {
        t = next;
        break;
      }
    }
    out.path[j + 1] = t;
  }
  return out;
}

}  // namespace

Alignment viterbi_align(const Curve& curve, const WarpMixtureModel& model) {
  Alignment al;
  al.curve_id = curve.id;
  al.log_joint = neg_inf;
  for (int k = 0; k < model.components(); ++k) {
    const Eigen::MatrixXd log_steps = renormalized_log_steps(model, k);
    for (int g1 = 0; g1 < model.max_shift(); ++g1) {
      const OffsetResult off = model.offsets_enabled
                                   ? optimal_offset(curve, model, k, g1)
                                   : OffsetResult{Eigen::VectorXd::Zero(curve.dims()), 0.0};
      const Eigen::MatrixXd x = curve.points.rowwise() - off.delta.transpose();
      const ViterbiPath vp = viterbi_conditional(x, model, k, g1, log_steps);
      if (vp.log_joint == neg_inf) continue;
      const double score =
          std::log(model.weights(k)) + std::log(model.init_dist(k, g1)) + vp.log_joint;
      if (score > al.log_joint) {
        al.log_joint = score;
        al.component = k;
        al.start = g1;
        al.path = vp.path;
        al.offset = off.delta;
      }
    }
  }
  if (al.log_joint == neg_inf)
    throw DataError("curve '" + curve.id + "' has no feasible alignment");
  return al;
}

namespace {

/* Enumeration-based reference. Renormalization and path semantics are
 * recomputed here from the raw tables so agreement with the recursions is a
 * genuine cross-check rather than shared code. */
struct Enumerator {
  const Eigen::MatrixXd& x;
  const WarpMixtureModel& model;
  int k;
  Eigen::MatrixXd emit;       // L x T
  Eigen::MatrixXd log_step;   // T x (S+2), renormalized

  Enumerator(const Eigen::MatrixXd& x_, const WarpMixtureModel& model_, int k_)
      : x(x_), model(model_), k(k_) {
    const int len = static_cast<int>(x.rows());
    const int t_len = model.grid_len();
    const int n_off = model.max_skip() + 2;
    emit.resize(len, t_len);
    for (int j = 0; j < len; ++j)
      for (int t = 0; t < t_len; ++t)
        emit(j, t) = gaussian_logdensity(x.row(j), model.means[k].row(t), model.vars[k].row(t));
    log_step = Eigen::MatrixXd::Constant(t_len, n_off, neg_inf);
    for (int t = 0; t < t_len; ++t) {
      const auto row = model.step_dist[k].row(model.tie_transitions ? 0 : t);
      double denom = 0.0;
      for (int o = 0; o < n_off; ++o)
        if (model.offset_supported(o) && t + o < t_len) denom += row(o);
      if (denom <= 0.0) continue;
      for (int o = 0; o < n_off; ++o)
        if (model.offset_supported(o) && t + o < t_len && row(o) > 0.0)
          log_step(t, o) = std::log(row(o)) - std::log(denom);
    }
  }

  template <typename Visit>
  void walk(int j, int t, double lp, std::vector<int>& path, const Visit& visit) {
    path[j] = t;
    if (j + 1 == static_cast<int>(x.rows())) {
      visit(path, lp);
      return;
    }
    for (int o = 0; o < log_step.cols(); ++o) {
      const double ls = log_step(t, o);
      if (ls == neg_inf) continue;
      walk(j + 1, t + o, lp + ls + emit(j + 1, t + o), path, visit);
    }
  }

  template <typename Visit>
  void enumerate(int g1, const Visit& visit) {
    std::vector<int> path(x.rows());
    walk(0, g1, emit(0, g1), path, visit);
  }
};

}  // namespace

BruteForceConditional brute_force_conditional(const Curve& curve, const WarpMixtureModel& model,
                                              int k, int g1, double max_paths) {
  const int len = static_cast<int>(curve.length());
  if (std::pow(model.max_skip() + 2.0, len - 1) > max_paths)
    throw std::runtime_error("instance too large for enumeration");

  const Eigen::MatrixXd x = translate(curve, model, k, g1);
  Enumerator en(x, model, k);

  double loglik = neg_inf;
  en.enumerate(g1, [&](const std::vector<int>&, double lp) { loglik = log_add(loglik, lp); });

  BruteForceConditional out;
  out.loglik = loglik;
  out.gamma = Eigen::MatrixXd::Zero(len, model.grid_len());
  out.xi = Eigen::MatrixXd::Zero(model.tie_transitions ? 1 : model.grid_len(),
                                 model.max_skip() + 2);
  if (loglik == neg_inf) return out;
  en.enumerate(g1, [&](const std::vector<int>& path, double lp) {
    const double weight = std::exp(lp - loglik);
    for (int j = 0; j < len; ++j) out.gamma(j, path[j]) += weight;
    for (int j = 0; j + 1 < len; ++j)
      out.xi(model.tie_transitions ? 0 : path[j], path[j + 1] - path[j]) += weight;
  });
  return out;
}

double brute_force_loglik(const Curve& curve, const WarpMixtureModel& model, double max_paths) {
  const int len = static_cast<int>(curve.length());
  const double per_start = std::pow(model.max_skip() + 2.0, len - 1);
  if (per_start * model.components() * model.max_shift() > max_paths)
    throw std::runtime_error("instance too large for enumeration");

  double total = neg_inf;
  for (int k = 0; k < model.components(); ++k)
    for (int g1 = 0; g1 < model.max_shift(); ++g1) {
      const double lw = std::log(model.weights(k)) + std::log(model.init_dist(k, g1));
      if (lw == neg_inf) continue;
      total = log_add(total, lw + brute_force_conditional(curve, model, k, g1, max_paths).loglik);
    }
  return total;
}

}  // namespace warpmix
