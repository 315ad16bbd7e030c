#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace warpmix {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/* One variable-length curve: row j of `points` is the j-th D-dimensional
 * observation. The time grid is implicit; only observation order is kept. */
struct Curve {
  std::string id;
  Eigen::MatrixXd points;  // L x D

  Eigen::Index length() const { return points.rows(); }
  Eigen::Index dims() const { return points.cols(); }
};

struct CurveSet {
  std::vector<Curve> curves;

  Eigen::Index size() const { return static_cast<Eigen::Index>(curves.size()); }
  Eigen::Index dims() const { return curves.empty() ? 0 : curves.front().dims(); }
  Eigen::Index max_length() const;
};

/* Structural and finiteness problems, one message per offence; empty if clean. */
std::vector<std::string> check_curve_set(const CurveSet& data);

/* Fitting configuration. grid_len == 0 means "derive from the data";
 * validate_config fills it in. Grid positions are 0-based in code. */
struct ModelConfig {
  int clusters = 1;    // K
  int max_shift = 1;   // M: allowed start positions 0..M-1
  int max_skip = 0;    // S: forward jumps of 2..S+1 grid points, on top of the unit advance
  bool allow_stay = false;
  int grid_len = 0;    // T
  bool offsets_enabled = true;
  bool tie_transitions = true;
  double dirichlet_alpha = 1.0;
  double variance_floor_frac = 1e-3;
  double min_occupancy = 1e-6;
  double tol = 1e-6;
  int max_iters = 200;
};

/* Shortest grid on which even a maximally skipping path from the last start
 * position fits: M + (l_max - 1) * (S + 1). */
int default_grid_length(int max_shift, int max_skip, int l_max);

std::vector<std::string> config_errors(const ModelConfig& cfg, const CurveSet& data);

/* Returns cfg with grid_len defaulted; throws ConfigError listing every problem. */
ModelConfig validate_config(const ModelConfig& cfg, const CurveSet& data);

/* Mixture of grid-aligned Gaussian curve models. Per component k:
 *   init_dist row k   — distribution over start positions 0..M-1
 *   step_dist[k]      — rows of step-offset probabilities over {0 (stay),
 *                       1 (advance), 2..S+1 (skips)}; one row when transitions
 *                       are tied, T rows otherwise
 *   means[k], vars[k] — T x D grids of emission means and diagonal variances
 * Stored step rows are the unconstrained distributions; positions near the
 * grid end renormalize over the offsets that still fit at evaluation time. */
struct WarpMixtureModel {
  bool allow_stay = false;
  bool tie_transitions = true;
  bool offsets_enabled = true;
  Eigen::VectorXd weights;                  // K
  Eigen::MatrixXd init_dist;                // K x M
  std::vector<Eigen::MatrixXd> step_dist;   // K of (1|T) x (S+2)
  std::vector<Eigen::MatrixXd> means;       // K of T x D
  std::vector<Eigen::MatrixXd> vars;        // K of T x D

  int components() const { return static_cast<int>(weights.size()); }
  int max_shift() const { return static_cast<int>(init_dist.cols()); }
  int max_skip() const {
    return step_dist.empty() ? 0 : static_cast<int>(step_dist.front().cols()) - 2;
  }
  int grid_len() const { return means.empty() ? 0 : static_cast<int>(means.front().rows()); }
  int dims() const { return means.empty() ? 0 : static_cast<int>(means.front().cols()); }

  /* True for step offsets the transition structure permits at all. */
  bool offset_supported(int offset) const {
    return offset == 0 ? allow_stay : offset >= 1 && offset <= max_skip() + 1;
  }
};

std::vector<std::string> check_model(const WarpMixtureModel& model);

/* MAP traversal of one curve: component, start, full grid path (one position
 * per observation, non-decreasing), measurement offset, and the joint
 * log probability of the whole assignment. */
struct Alignment {
  std::string curve_id;
  int component = 0;
  int start = 0;
  std::vector<int> path;
  Eigen::VectorXd offset;
  double log_joint = 0.0;
};

/* Per-dimension global moments of a curve set, used for initialization and
 * variance floors. */
struct DataSummary {
  Eigen::VectorXd mean;  // D
  Eigen::VectorXd var;   // D, population variance over all observations
  Eigen::Index n_obs = 0;
};

DataSummary summarize(const CurveSet& data);

/* Absolute per-dimension variance floor implied by cfg and the data. */
Eigen::VectorXd variance_floor(const ModelConfig& cfg, const DataSummary& summary);

}  // namespace warpmix
