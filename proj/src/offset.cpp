#include "warpmix/offset.hpp"

namespace warpmix {

OffsetResult optimal_offset(const Curve& curve, const WarpMixtureModel& model, int k, int g1) {
  const Eigen::Index len = curve.length();
  OffsetResult out;
  out.delta = Eigen::VectorXd::Zero(curve.dims());
  if (!model.offsets_enabled) {
    return out;
  }
  if (g1 + len > model.grid_len())
    throw ConfigError("offset segment [" + std::to_string(g1) + ", " +
                      std::to_string(g1 + len - 1) + "] overruns grid of length " +
                      std::to_string(model.grid_len()));

  const Eigen::MatrixXd diff = curve.points - model.means[k].middleRows(g1, len);
  out.delta = diff.colwise().mean().transpose();
  out.residual_ss = (diff.rowwise() - out.delta.transpose()).squaredNorm();
  return out;
}

}  // namespace warpmix
