#include "warpmix/em.hpp"

#include <cmath>

#include "warpmix/inference.hpp"
#include "warpmix/numeric.hpp"
#include "warpmix/offset.hpp"

namespace warpmix {

SufficientStats SufficientStats::zeros(const WarpMixtureModel& model) {
  SufficientStats s;
  const int k_count = model.components();
  s.comp_weight = Eigen::VectorXd::Zero(k_count);
  s.init_counts = Eigen::MatrixXd::Zero(k_count, model.max_shift());
  s.step_counts.resize(k_count);
  s.mean_num.resize(k_count);
  s.mean_den.resize(k_count);
  s.sq_sum.resize(k_count);
  for (int k = 0; k < k_count; ++k) {
    s.step_counts[k] = Eigen::MatrixXd::Zero(model.tie_transitions ? 1 : model.grid_len(),
                                             model.max_skip() + 2);
    s.mean_num[k] = Eigen::MatrixXd::Zero(model.grid_len(), model.dims());
    s.mean_den[k] = Eigen::VectorXd::Zero(model.grid_len());
    s.sq_sum[k] = Eigen::MatrixXd::Zero(model.grid_len(), model.dims());
  }
  return s;
}

void SufficientStats::merge(const SufficientStats& other) {
  comp_weight += other.comp_weight;
  init_counts += other.init_counts;
  for (size_t k = 0; k < step_counts.size(); ++k) {
    step_counts[k] += other.step_counts[k];
    mean_num[k] += other.mean_num[k];
    mean_den[k] += other.mean_den[k];
    sq_sum[k] += other.sq_sum[k];
  }
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

WarpMixtureModel init_from_random_curves(const CurveSet& data, const ModelConfig& cfg,
                                         std::mt19937_64& rng) {
  const int n = static_cast<int>(data.size());
  if (n < cfg.clusters)
    throw ConfigError("need at least K = " + std::to_string(cfg.clusters) + " curves, have " +
                      std::to_string(n));
  if (cfg.grid_len <= 0) throw ConfigError("grid_len unresolved; run validate_config first");

  const DataSummary summary = summarize(data);
  const Eigen::VectorXd floor = variance_floor(cfg, summary);

  // Distinct seed curves via partial Fisher-Yates.
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  for (int i = 0; i < cfg.clusters; ++i) {
    std::uniform_int_distribution<int> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }

  WarpMixtureModel m;
  m.allow_stay = cfg.allow_stay;
  m.tie_transitions = cfg.tie_transitions;
  m.offsets_enabled = cfg.offsets_enabled;
  m.weights = Eigen::VectorXd::Constant(cfg.clusters, 1.0 / cfg.clusters);
  m.init_dist = Eigen::MatrixXd::Constant(cfg.clusters, cfg.max_shift, 1.0 / cfg.max_shift);

  Eigen::VectorXd step = Eigen::VectorXd::Zero(cfg.max_skip + 2);
  step(1) = 0.8;
  if (cfg.allow_stay) step(0) = 0.1;
  if (cfg.max_skip >= 1) {
    const double rest = 1.0 - step.sum();
    for (int o = 2; o <= cfg.max_skip + 1; ++o) step(o) = rest / cfg.max_skip;
  }
  step /= step.sum();

  const int write_at = (cfg.max_shift - 1) / 2;  // 0-based ceil(M/2)
  m.step_dist.resize(cfg.clusters);
  m.means.resize(cfg.clusters);
  m.vars.resize(cfg.clusters);
  for (int k = 0; k < cfg.clusters; ++k) {
    m.step_dist[k] =
        step.transpose().replicate(cfg.tie_transitions ? 1 : cfg.grid_len, 1);
    const Curve& c = data.curves[idx[k]];
    m.means[k] = summary.mean.transpose().replicate(cfg.grid_len, 1);
    Eigen::MatrixXd seed_points = c.points;
    if (cfg.offsets_enabled)
      seed_points.rowwise() -= c.points.colwise().mean();
    m.means[k].middleRows(write_at, c.length()) = seed_points;
    m.vars[k] = summary.var.cwiseMax(floor).transpose().replicate(cfg.grid_len, 1);
  }
  return m;
}

double log_table_prior(const WarpMixtureModel& model, const ModelConfig& cfg) {
  const double a = cfg.dirichlet_alpha;
  if (a == 0.0) return 0.0;
  double lp = model.weights.array().log().sum() + model.init_dist.array().log().sum();
  for (int k = 0; k < model.components(); ++k) {
    const auto& step = model.step_dist[k];
    for (int r = 0; r < step.rows(); ++r)
      for (int o = 0; o < step.cols(); ++o)
        if (model.offset_supported(o)) lp += std::log(step(r, o));
  }
  return a * lp;
}

std::pair<SufficientStats, double> e_step(const CurveSet& data, const WarpMixtureModel& model,
                                          const ModelConfig& cfg) {
  const int k_count = model.components();
  const int m_count = model.max_shift();

  std::vector<Eigen::MatrixXd> log_steps(k_count);
  for (int k = 0; k < k_count; ++k) log_steps[k] = renormalized_log_steps(model, k);

  SufficientStats stats = SufficientStats::zeros(model);
  double total_loglik = 0.0;

  std::vector<WindowedPosteriors> post(k_count * m_count);
  std::vector<Eigen::MatrixXd> translated(k_count * m_count);
  Eigen::MatrixXd lw(k_count, m_count);

  for (const Curve& curve : data.curves) {
    for (int k = 0; k < k_count; ++k) {
      for (int g1 = 0; g1 < m_count; ++g1) {
        const int slot = k * m_count + g1;
        if (model.offsets_enabled) {
          const OffsetResult off = optimal_offset(curve, model, k, g1);
          translated[slot] = curve.points.rowwise() - off.delta.transpose();
        } else {
          translated[slot] = curve.points;
        }
        post[slot] = conditional_posteriors(translated[slot], model, k, g1, log_steps[k]);
        lw(k, g1) = std::log(model.weights(k)) + std::log(model.init_dist(k, g1)) +
                    post[slot].loglik;
      }
    }
    const double le = log_sum_exp(lw.reshaped());
    if (le == neg_inf)
      throw DataError("curve '" + curve.id + "' has zero probability under the model");
    total_loglik += le;

    for (int k = 0; k < k_count; ++k) {
      for (int g1 = 0; g1 < m_count; ++g1) {
        const double w = std::exp(lw(k, g1) - le);
        if (!(w > 0.0)) continue;
        const int slot = k * m_count + g1;
        const auto& wp = post[slot];
        const auto& x = translated[slot];
        stats.comp_weight(k) += w;
        stats.init_counts(k, g1) += w;
        stats.step_counts[k] += w * wp.xi;
        for (size_t j = 0; j < wp.gamma_rows.size(); ++j) {
          const int lo = wp.row_lo[j];
          for (Eigen::Index i = 0; i < wp.gamma_rows[j].size(); ++i) {
            const double wg = w * wp.gamma_rows[j](i);
            if (wg == 0.0) continue;
            const int t = lo + static_cast<int>(i);
            stats.mean_den[k](t) += wg;
            stats.mean_num[k].row(t) += wg * x.row(j);
            stats.sq_sum[k].row(t) += wg * x.row(j).array().square().matrix();
          }
        }
      }
    }
  }
  return {std::move(stats), total_loglik + log_table_prior(model, cfg)};
}

WarpMixtureModel m_step(const SufficientStats& stats, const ModelConfig& cfg,
                        const WarpMixtureModel& prev, const DataSummary& summary) {
  const int k_count = prev.components();
  const int m_count = prev.max_shift();
  const double a = cfg.dirichlet_alpha;
  const Eigen::VectorXd floor = variance_floor(cfg, summary);

  WarpMixtureModel m = prev;
  const double n = stats.comp_weight.sum();
  m.weights = (stats.comp_weight.array() + a) / (n + k_count * a);

  for (int k = 0; k < k_count; ++k) {
    // A dead component under alpha = 0 keeps its previous tables.
    if (stats.comp_weight(k) + m_count * a > 0.0)
      m.init_dist.row(k) =
          (stats.init_counts.row(k).array() + a) / (stats.comp_weight(k) + m_count * a);

    for (int r = 0; r < stats.step_counts[k].rows(); ++r) {
      double denom = 0.0;
      int n_supported = 0;
      for (int o = 0; o < stats.step_counts[k].cols(); ++o)
        if (prev.offset_supported(o)) {
          denom += stats.step_counts[k](r, o);
          ++n_supported;
        }
      denom += n_supported * a;
      if (denom > 0.0) {
        for (int o = 0; o < stats.step_counts[k].cols(); ++o)
          m.step_dist[k](r, o) =
              prev.offset_supported(o) ? (stats.step_counts[k](r, o) + a) / denom : 0.0;
      }
      // denom == 0 (alpha 0, no observed transitions): keep the previous row.
    }

    for (int t = 0; t < prev.grid_len(); ++t) {
      const double den = stats.mean_den[k](t);
      if (den > cfg.min_occupancy) {
        m.means[k].row(t) = stats.mean_num[k].row(t) / den;
        m.vars[k].row(t) = ((stats.sq_sum[k].row(t) / den).array() -
                            m.means[k].row(t).array().square())
                               .max(floor.transpose().array());
      } else if (den == 0.0) {
        m.vars[k].row(t) = floor.transpose();
      }
      // Occupancy in (0, min_occupancy]: retain the previous mean and variance.
    }
  }
  return m;
}

FitResult fit(const CurveSet& data, const ModelConfig& cfg0, std::uint64_t seed) {
  const ModelConfig cfg = validate_config(cfg0, data);
  const DataSummary summary = summarize(data);
  std::mt19937_64 rng(seed);

  FitResult result;
  result.seed = seed;
  result.model = init_from_random_curves(data, cfg, rng);

  double prev_obj = 0.0;
  while (true) {
    auto [stats, obj] = e_step(data, result.model, cfg);
    result.objective_trace.push_back(obj);
    if (result.objective_trace.size() > 1) {
      if (obj < prev_obj - 1e-6)
        result.warnings.push_back("objective decreased by " + std::to_string(prev_obj - obj) +
                                  " entering iteration " +
                                  std::to_string(result.iterations));
      const double rel = std::abs(obj - prev_obj) / (1.0 + std::abs(prev_obj));
      if (rel <= cfg.tol) {
        result.converged = true;
        break;
      }
    }
    if (result.iterations >= cfg.max_iters) break;
    result.model = m_step(stats, cfg, result.model, summary);
    ++result.iterations;
    prev_obj = obj;
  }
  return result;
}

FitResult fit_multi_start(const CurveSet& data, const ModelConfig& cfg, int n_starts,
                          std::uint64_t seed) {
  if (n_starts < 1) throw ConfigError("n_starts must be >= 1");
  FitResult best;
  bool have = false;
  for (int i = 0; i < n_starts; ++i) {
    FitResult r = fit(data, cfg, derive_seed(seed, i));
    if (!have || r.objective_trace.back() > best.objective_trace.back()) {
      best = std::move(r);
      have = true;
    }
  }
  return best;
}

}  // namespace warpmix
