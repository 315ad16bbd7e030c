#include "warpmix/synth.hpp"

#include <cmath>

#include "warpmix/numeric.hpp"

namespace warpmix {

namespace {

int sample_index(const Eigen::VectorXd& weights, std::mt19937_64& rng) {
  const double total = weights.sum();
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = unif(rng) * total;
  for (Eigen::Index i = 0; i + 1 < weights.size(); ++i) {
    u -= weights(i);
    if (u < 0) return static_cast<int>(i);
  }
  return static_cast<int>(weights.size() - 1);
}

}  // namespace

WarpMixtureModel make_template_model(int clusters, int dims, int max_shift, int max_skip,
                                     int grid_len, TemplateShape shape, double separation,
                                     double noise_var, bool allow_stay) {
  WarpMixtureModel m;
  m.allow_stay = allow_stay;
  m.tie_transitions = true;
  m.offsets_enabled = true;
  m.weights = Eigen::VectorXd::Constant(clusters, 1.0 / clusters);
  m.init_dist = Eigen::MatrixXd::Constant(clusters, max_shift, 1.0 / max_shift);

  const int n_off = max_skip + 2;
  int n_supported = 1 + max_skip + (allow_stay ? 1 : 0);
  m.step_dist.resize(clusters);
  m.means.resize(clusters);
  m.vars.resize(clusters);
  for (int k = 0; k < clusters; ++k) {
    Eigen::MatrixXd step = Eigen::MatrixXd::Zero(1, n_off);
    for (int o = 0; o < n_off; ++o)
      if (o == 0 ? allow_stay : true) step(0, o) = 1.0 / n_supported;
    m.step_dist[k] = step;

    m.means[k].resize(grid_len, dims);
    for (int t = 0; t < grid_len; ++t) {
      const double u = grid_len > 1 ? static_cast<double>(t) / (grid_len - 1) : 0.0;
      double base = 0.0;
      switch (shape) {
        case TemplateShape::bump: {
          // Gaussian bumps at distinct grid locations, width a fixed fraction
          // of the grid so components stay separated as K grows.
          const double center = (k + 1.0) / (clusters + 1.0) * (grid_len - 1);
          const double width = std::max(1.0, grid_len / (4.0 * clusters));
          base = std::exp(-0.5 * std::pow((t - center) / width, 2));
          break;
        }
        case TemplateShape::ramp:
          base = u * (k + 1.0);
          break;
        case TemplateShape::sine:
          base = std::sin(2.0 * M_PI * (1.0 + 0.5 * k) * u + 0.8 * k);
          break;
      }
      for (int d = 0; d < dims; ++d)
        m.means[k](t, d) = separation * base * (1.0 + 0.5 * d);
    }
    m.vars[k] = Eigen::MatrixXd::Constant(grid_len, dims, noise_var);
  }
  return m;
}

std::pair<Curve, LatentRecord> sample_curve(const WarpMixtureModel& model, int length,
                                            std::mt19937_64& rng, double offset_sigma) {
  const int t_len = model.grid_len();
  const int n_off = model.max_skip() + 2;

  LatentRecord rec;
  rec.component = sample_index(model.weights, rng);
  rec.start = sample_index(model.init_dist.row(rec.component).transpose(), rng);
  rec.path.resize(length);
  rec.path[0] = rec.start;

  const auto& step = model.step_dist[rec.component];
  for (int j = 1; j < length; ++j) {
    const int t = rec.path[j - 1];
    const auto row = step.row(model.tie_transitions ? 0 : t);
    Eigen::VectorXd feasible = Eigen::VectorXd::Zero(n_off);
    for (int o = 0; o < n_off; ++o)
      if (model.offset_supported(o) && t + o < t_len) feasible(o) = row(o);
    if (feasible.sum() <= 0.0)
      throw std::logic_error("sample_curve: no feasible step from grid position " +
                             std::to_string(t));
    rec.path[j] = t + sample_index(feasible, rng);
  }

  Curve curve;
  curve.points.resize(length, model.dims());
  std::normal_distribution<double> unit_normal(0.0, 1.0);
  for (int j = 0; j < length; ++j) {
    const int t = rec.path[j];
    for (int d = 0; d < model.dims(); ++d)
      curve.points(j, d) = model.means[rec.component](t, d) +
                           std::sqrt(model.vars[rec.component](t, d)) * unit_normal(rng);
  }

  rec.offset = Eigen::VectorXd::Zero(model.dims());
  if (offset_sigma > 0)
    for (int d = 0; d < model.dims(); ++d) rec.offset(d) = offset_sigma * unit_normal(rng);
  curve.points.rowwise() += rec.offset.transpose();
  return {std::move(curve), std::move(rec)};
}

std::pair<CurveSet, std::vector<LatentRecord>> sample_dataset(const WarpMixtureModel& model,
                                                              int n, int min_length,
                                                              int max_length,
                                                              std::mt19937_64& rng,
                                                              double offset_sigma) {
  CurveSet data;
  std::vector<LatentRecord> latents;
  data.curves.reserve(n);
  latents.reserve(n);
  std::uniform_int_distribution<int> length_dist(min_length, max_length);
  for (int i = 0; i < n; ++i) {
    const int len = length_dist(rng);
    auto [curve, rec] = sample_curve(model, len, rng, offset_sigma);
    curve.id = "c" + std::to_string(i);
    data.curves.push_back(std::move(curve));
    latents.push_back(std::move(rec));
  }
  return {std::move(data), std::move(latents)};
}

}  // namespace warpmix
