#pragma once

#include "warpmix/numeric.hpp"
#include "warpmix/offset.hpp"
#include "warpmix/types.hpp"

namespace warpmix {

/* Diagonal-Gaussian log density of one observation. */
double emission_logdensity(const Eigen::VectorXd& y, const Eigen::VectorXd& mean,
                           const Eigen::VectorXd& var);

/* Posterior over the conditioning pair (component, start) for one curve,
 * w(k, g1) = P(Z = k, G1 = g1 | Y), plus the total log evidence log P(Y). */
struct CutsetPosterior {
  Eigen::MatrixXd table;  // K x M, entries >= 0, sums to 1
  double log_evidence = 0.0;
};

/* Exact chain posteriors given (component, start). */
struct Occupancies {
  Eigen::MatrixXd gamma;  // L x T state occupancies, each row sums to 1
  Eigen::MatrixXd xi;     // expected step-offset counts: 1 x (S+2) tied, T x (S+2) untied
};

/* Occupancies restricted to the grid positions reachable at each observation
 * row. Row j of gamma covers positions [row_lo[j], row_lo[j] + size - 1].
 * loglik is -inf and the rows are empty when no legal path exists. */
struct WindowedPosteriors {
  double loglik = neg_inf;
  std::vector<int> row_lo;
  std::vector<Eigen::VectorXd> gamma_rows;
  Eigen::MatrixXd xi;
};

/* Per-position step-offset log probabilities for component k, renormalized at
 * each position over the offsets that stay on the grid. Entry (t, o) is -inf
 * for unsupported offsets and for t + o >= T. */
Eigen::MatrixXd renormalized_log_steps(const WarpMixtureModel& model, int k);

/* Engine entry points on an already-translated curve; `log_steps` comes from
 * renormalized_log_steps so callers can amortize it over starts and curves. */
double conditional_loglik(const Eigen::MatrixXd& translated, const WarpMixtureModel& model,
                          int k, int g1, const Eigen::MatrixXd& log_steps);
WindowedPosteriors conditional_posteriors(const Eigen::MatrixXd& translated,
                                          const WarpMixtureModel& model, int k, int g1,
                                          const Eigen::MatrixXd& log_steps);

/* log P(Y | k, g1): subtracts the optimal offset, then runs the forward
 * recursion from a point mass at g1. */
double conditional_curve_loglik(const Curve& curve, const WarpMixtureModel& model, int k, int g1);

/* Full occupancy/step posteriors given (k, g1) together with log P(Y | k, g1). */
std::pair<Occupancies, double> forward_backward(const Curve& curve, const WarpMixtureModel& model,
                                                int k, int g1);

CutsetPosterior cutset_posterior(const Curve& curve, const WarpMixtureModel& model);

/* log P(Y | model), marginal over components, starts, and paths. */
double curve_loglik(const Curve& curve, const WarpMixtureModel& model);

/* MAP (component, start, path) with the offset of the chosen pair. Ties break
 * toward the smallest component, then smallest start, then the
 * lexicographically earliest path. */
Alignment viterbi_align(const Curve& curve, const WarpMixtureModel& model);

/* Exact-by-enumeration counterparts, independent of the recursions above.
 * Both throw when the instance exceeds max_paths enumerated paths. */
struct BruteForceConditional {
  double loglik = neg_inf;
  Eigen::MatrixXd gamma;  // L x T
  Eigen::MatrixXd xi;     // (1|T) x (S+2)
};

BruteForceConditional brute_force_conditional(const Curve& curve, const WarpMixtureModel& model,
                                              int k, int g1, double max_paths = 1e7);
double brute_force_loglik(const Curve& curve, const WarpMixtureModel& model,
                          double max_paths = 1e7);

}  // namespace warpmix
