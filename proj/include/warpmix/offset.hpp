#pragma once

#include "warpmix/types.hpp"

namespace warpmix {

struct OffsetResult {
  Eigen::VectorXd delta;  // D
  double residual_ss = 0.0;
};

/* Measurement-axis offset that best aligns the curve with the component-k mean
 * segment starting at grid position g1, pairing observation j with position
 * g1 + j regardless of skips or stays. Under the Euclidean norm this is the
 * per-dimension mean of differences, the unique minimizer of the residual
 * sum of squares. Requires g1 + L - 1 < T; returns zero when the model has
 * offsets disabled. */
OffsetResult optimal_offset(const Curve& curve, const WarpMixtureModel& model, int k, int g1);

}  // namespace warpmix
