#pragma once

#include <random>

#include "warpmix/types.hpp"

namespace warpmix {

/* Ground-truth generation record for one sampled curve. */
struct LatentRecord {
  int component = 0;
  int start = 0;
  std::vector<int> path;
  Eigen::VectorXd offset;
};

enum class TemplateShape { bump, ramp, sine };

/* Model fixture with K well-separated smooth mean curves on a T-point grid,
 * constant variances, and uniform probability tables. Mean magnitudes scale
 * linearly with `separation`. */
WarpMixtureModel make_template_model(int clusters, int dims, int max_shift, int max_skip,
                                     int grid_len, TemplateShape shape, double separation,
                                     double noise_var, bool allow_stay);

/* Draws one curve of the given length from the generative process: component,
 * start, path and emissions from the model, then a measurement offset drawn
 * from an isotropic normal with standard deviation offset_sigma. */
std::pair<Curve, LatentRecord> sample_curve(const WarpMixtureModel& model, int length,
                                            std::mt19937_64& rng, double offset_sigma);

std::pair<CurveSet, std::vector<LatentRecord>> sample_dataset(const WarpMixtureModel& model,
                                                              int n, int min_length,
                                                              int max_length,
                                                              std::mt19937_64& rng,
                                                              double offset_sigma);

}  // namespace warpmix
