#pragma once

#include <cstdint>

#include "warpmix/types.hpp"

namespace warpmix {

enum class Variant { none, shift, warp, both };

std::string variant_label(Variant v);

/* Maps a variant onto the base configuration's time-transform knobs:
 *   none  — M = 1, S = 0, no stays (plain Gaussian mixture)
 *   shift — base M, S = 0, no stays
 *   warp  — M = 1, base S, stays allowed
 *   both  — base M, base S, stays allowed
 * The grid length is re-derived per variant. Offsets follow the base config. */
ModelConfig variant_config(const ModelConfig& base, Variant v);

struct CVReport {
  int folds = 0;
  std::vector<double> per_fold_logp;
  double mean_logp = 0.0;
  std::string config_label;
};

/* Mean held-out log density per measurement: sum of curve log-likelihoods
 * divided by the total observation count times D. */
double heldout_logp(const WarpMixtureModel& model, const CurveSet& data);

/* Seeded shuffle-then-blocks fold assignment; returns `folds` disjoint index
 * sets covering 0..n-1. */
std::vector<std::vector<Eigen::Index>> cv_folds(Eigen::Index n, int folds, std::uint64_t seed);

CVReport cross_validate(const CurveSet& data, const ModelConfig& cfg, int folds, int n_starts,
                        std::uint64_t seed);

/* Pooled standard deviation of the residuals between each curve and its
 * Viterbi-aligned, offset-corrected cluster mean. */
double within_cluster_stdev(const WarpMixtureModel& model, const CurveSet& data);

/* Cross-validates each variant on identical fold splits. */
std::vector<CVReport> compare_variants(const CurveSet& data, const ModelConfig& base,
                                       const std::vector<Variant>& variants, int folds,
                                       int n_starts, std::uint64_t seed);

}  // namespace warpmix
