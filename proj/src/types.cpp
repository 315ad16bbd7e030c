#include "warpmix/types.hpp"

#include <cmath>
#include <sstream>

namespace warpmix {

Eigen::Index CurveSet::max_length() const {
  Eigen::Index l_max = 0;
  for (const auto& c : curves) l_max = std::max(l_max, c.length());
  return l_max;
}

std::vector<std::string> check_curve_set(const CurveSet& data) {
  std::vector<std::string> errs;
  const Eigen::Index d = data.dims();
  if (!data.curves.empty() && d < 1) errs.push_back("curves carry no measurement dimensions");
  for (const auto& c : data.curves) {
    if (c.length() < 1) errs.push_back("curve '" + c.id + "': no points");
    if (c.dims() != d)
      errs.push_back("curve '" + c.id + "': dimensionality " + std::to_string(c.dims()) +
                     " != " + std::to_string(d));
    if (!c.points.allFinite()) errs.push_back("curve '" + c.id + "': non-finite value");
  }
  return errs;
}

int default_grid_length(int max_shift, int max_skip, int l_max) {
  return max_shift + (l_max - 1) * (max_skip + 1);
}

std::vector<std::string> config_errors(const ModelConfig& cfg, const CurveSet& data) {
  std::vector<std::string> errs;
  if (cfg.clusters < 1) errs.push_back("clusters must be >= 1");
  if (cfg.max_shift < 1) errs.push_back("max-shift must be >= 1");
  if (cfg.max_skip < 0) errs.push_back("max-skip must be >= 0");
  if (!(cfg.tol > 0)) errs.push_back("tol must be positive");
  if (cfg.max_iters < 1) errs.push_back("max-iters must be >= 1");
  if (cfg.dirichlet_alpha < 0) errs.push_back("alpha must be >= 0");
  if (cfg.variance_floor_frac < 0) errs.push_back("variance floor fraction must be >= 0");
  if (data.size() < 1) errs.push_back("empty dataset");

  auto data_errs = check_curve_set(data);
  errs.insert(errs.end(), data_errs.begin(), data_errs.end());

  const int l_max = static_cast<int>(data.max_length());
  if (cfg.grid_len > 0 && cfg.max_shift >= 1 && l_max >= 1 &&
      cfg.grid_len < cfg.max_shift - 1 + l_max)
    errs.push_back("grid length " + std::to_string(cfg.grid_len) +
                   " too short: need at least max_shift - 1 + l_max = " +
                   std::to_string(cfg.max_shift - 1 + l_max));
  return errs;
}

ModelConfig validate_config(const ModelConfig& cfg, const CurveSet& data) {
  auto errs = config_errors(cfg, data);
  if (!errs.empty()) {
    std::ostringstream msg;
    msg << "invalid configuration:";
    for (const auto& e : errs) msg << "\n  - " << e;
    throw ConfigError(msg.str());
  }
  ModelConfig out = cfg;
  if (out.grid_len == 0)
    out.grid_len = default_grid_length(out.max_shift, out.max_skip,
                                       static_cast<int>(data.max_length()));
  return out;
}

std::vector<std::string> check_model(const WarpMixtureModel& m) {
  std::vector<std::string> errs;
  const int k_count = m.components();
  const int t_len = m.grid_len();
  const double tol = 1e-6;

  if (k_count < 1) errs.push_back("no components");
  if (std::abs(m.weights.sum() - 1.0) > tol) errs.push_back("weights do not sum to 1");
  if ((m.weights.array() < 0).any()) errs.push_back("negative mixture weight");
  if (static_cast<int>(m.init_dist.rows()) != k_count) errs.push_back("init_dist row count != K");
  const auto k_size = static_cast<size_t>(k_count);
  if (m.step_dist.size() != k_size || m.means.size() != k_size || m.vars.size() != k_size) {
    errs.push_back("per-component table count != K");
    return errs;
  }

  for (int k = 0; k < k_count; ++k) {
    if (std::abs(m.init_dist.row(k).sum() - 1.0) > tol)
      errs.push_back("init_dist row " + std::to_string(k) + " does not sum to 1");
    if ((m.init_dist.row(k).array() < 0).any())
      errs.push_back("init_dist row " + std::to_string(k) + " has negative entry");

    const auto& step = m.step_dist[k];
    const int expect_rows = m.tie_transitions ? 1 : t_len;
    if (static_cast<int>(step.rows()) != expect_rows)
      errs.push_back("step_dist[" + std::to_string(k) + "] has wrong row count");
    for (int r = 0; r < step.rows(); ++r) {
      if (std::abs(step.row(r).sum() - 1.0) > tol)
        errs.push_back("step_dist[" + std::to_string(k) + "] row " + std::to_string(r) +
                       " does not sum to 1");
      if ((step.row(r).array() < 0).any())
        errs.push_back("step_dist[" + std::to_string(k) + "] row " + std::to_string(r) +
                       " has negative entry");
      if (!m.allow_stay && step(r, 0) != 0.0)
        errs.push_back("step_dist[" + std::to_string(k) + "] row " + std::to_string(r) +
                       " gives mass to the stay step with stays disabled");
    }

    if (m.means[k].rows() != t_len || m.vars[k].rows() != t_len ||
        m.means[k].cols() != m.dims() || m.vars[k].cols() != m.dims())
      errs.push_back("component " + std::to_string(k) + " grid shape mismatch");
    if ((m.vars[k].array() <= 0).any())
      errs.push_back("component " + std::to_string(k) + " has non-positive variance");
    if (!m.means[k].allFinite() || !m.vars[k].allFinite())
      errs.push_back("component " + std::to_string(k) + " has non-finite parameters");
  }
  return errs;
}

DataSummary summarize(const CurveSet& data) {
  DataSummary s;
  const Eigen::Index d = data.dims();
  s.mean = Eigen::VectorXd::Zero(d);
  s.var = Eigen::VectorXd::Zero(d);
  for (const auto& c : data.curves) {
    s.mean += c.points.colwise().sum().transpose();
    s.n_obs += c.length();
  }
  if (s.n_obs == 0) return s;
  s.mean /= static_cast<double>(s.n_obs);
  for (const auto& c : data.curves) {
    Eigen::MatrixXd centered = c.points.rowwise() - s.mean.transpose();
    s.var += centered.array().square().colwise().sum().matrix().transpose();
  }
  s.var /= static_cast<double>(s.n_obs);
  return s;
}

Eigen::VectorXd variance_floor(const ModelConfig& cfg, const DataSummary& summary) {
  return (summary.var.array() * cfg.variance_floor_frac).max(1e-12).matrix();
}

}  // namespace warpmix
