#pragma once

#include <cstdint>
#include <random>

#include "warpmix/types.hpp"

namespace warpmix {

/* Expected counts accumulated by one E-step. Additive: stats of a dataset
 * equal the merged stats of any partition of it, so parallel workers can
 * accumulate per-curve blocks and merge in curve order. sq_sum holds raw
 * weighted squares; variances come out as sq_sum/den - mean^2. */
struct SufficientStats {
  Eigen::VectorXd comp_weight;               // K
  Eigen::MatrixXd init_counts;               // K x M
  std::vector<Eigen::MatrixXd> step_counts;  // K of (1|T) x (S+2)
  std::vector<Eigen::MatrixXd> mean_num;     // K of T x D
  std::vector<Eigen::VectorXd> mean_den;     // K of T
  std::vector<Eigen::MatrixXd> sq_sum;       // K of T x D

  static SufficientStats zeros(const WarpMixtureModel& model);
  void merge(const SufficientStats& other);
};

struct FitResult {
  WarpMixtureModel model;
  std::vector<double> objective_trace;  // entry i = objective before update i;
                                        // final entry scores the returned model
  int iterations = 0;
  bool converged = false;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
};

/* Seeds each component mean with one of K distinct random curves written onto
 * the grid at start position ceil(M/2); requires a validated config. */
WarpMixtureModel init_from_random_curves(const CurveSet& data, const ModelConfig& cfg,
                                         std::mt19937_64& rng);

/* One E-step: expected counts plus the MAP objective (data log-likelihood of
 * the given model plus the Dirichlet log prior of its probability tables). */
std::pair<SufficientStats, double> e_step(const CurveSet& data, const WarpMixtureModel& model,
                                          const ModelConfig& cfg);

double log_table_prior(const WarpMixtureModel& model, const ModelConfig& cfg);

/* MAP update of the tables, ML update of means and variances. Grid positions
 * with expected occupancy at or below cfg.min_occupancy keep the previous
 * mean; exact-zero occupancy drops the variance to the floor. */
WarpMixtureModel m_step(const SufficientStats& stats, const ModelConfig& cfg,
                        const WarpMixtureModel& prev, const DataSummary& summary);

FitResult fit(const CurveSet& data, const ModelConfig& cfg, std::uint64_t seed);

/* Independent seeded restarts; returns the run with the best final objective
 * (first winner on ties). Start i runs with derive_seed(seed, i). */
FitResult fit_multi_start(const CurveSet& data, const ModelConfig& cfg, int n_starts,
                          std::uint64_t seed);

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace warpmix
