#include "warpmix/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "warpmix/em.hpp"
#include "warpmix/inference.hpp"

namespace warpmix {

std::string variant_label(Variant v) {
  switch (v) {
    case Variant::none: return "none";
    case Variant::shift: return "shift";
    case Variant::warp: return "warp";
    case Variant::both: return "both";
  }
  return "?";
}

ModelConfig variant_config(const ModelConfig& base, Variant v) {
  ModelConfig cfg = base;
  cfg.grid_len = 0;
  const bool shifts = v == Variant::shift || v == Variant::both;
  const bool warps = v == Variant::warp || v == Variant::both;
  cfg.max_shift = shifts ? base.max_shift : 1;
  cfg.max_skip = warps ? base.max_skip : 0;
  cfg.allow_stay = warps;
  return cfg;
}

namespace {

std::string infer_label(const ModelConfig& cfg) {
  const bool shifts = cfg.max_shift > 1;
  const bool warps = cfg.max_skip > 0 || cfg.allow_stay;
  if (shifts && warps) return "both";
  if (shifts) return "shift";
  if (warps) return "warp";
  return "none";
}

}  // namespace

double heldout_logp(const WarpMixtureModel& model, const CurveSet& data) {
  double total = 0.0;
  Eigen::Index n_measurements = 0;
  for (const auto& curve : data.curves) {
    total += curve_loglik(curve, model);
    n_measurements += curve.length() * curve.dims();
  }
  return total / static_cast<double>(n_measurements);
}

std::vector<std::vector<Eigen::Index>> cv_folds(Eigen::Index n, int folds, std::uint64_t seed) {
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::vector<Eigen::Index>> out(folds);
  const Eigen::Index base = n / folds;
  const Eigen::Index extra = n % folds;
  Eigen::Index at = 0;
  for (int f = 0; f < folds; ++f) {
    const Eigen::Index size = base + (f < extra ? 1 : 0);
    out[f].assign(order.begin() + at, order.begin() + at + size);
    at += size;
  }
  return out;
}

CVReport cross_validate(const CurveSet& data, const ModelConfig& cfg, int folds, int n_starts,
                        std::uint64_t seed) {
  if (folds < 2) throw ConfigError("need at least 2 folds");
  if (data.size() < folds) throw ConfigError("fewer curves than folds");
  // Resolve the grid once against the full dataset so every fold's model can
  // score every held-out curve.
  const ModelConfig resolved = validate_config(cfg, data);
  const auto fold_idx = cv_folds(data.size(), folds, seed);

  CVReport report;
  report.folds = folds;
  report.config_label = infer_label(resolved);
  for (int f = 0; f < folds; ++f) {
    CurveSet train, test;
    std::vector<char> in_test(data.size(), 0);
    for (auto i : fold_idx[f]) in_test[i] = 1;
    for (Eigen::Index i = 0; i < data.size(); ++i)
      (in_test[i] ? test : train).curves.push_back(data.curves[i]);
    const FitResult fitted = fit_multi_start(train, resolved, n_starts, derive_seed(seed, f));
    report.per_fold_logp.push_back(heldout_logp(fitted.model, test));
  }
  report.mean_logp =
      std::accumulate(report.per_fold_logp.begin(), report.per_fold_logp.end(), 0.0) / folds;
  return report;
}

double within_cluster_stdev(const WarpMixtureModel& model, const CurveSet& data) {
  double ss = 0.0;
  Eigen::Index count = 0;
  for (const auto& curve : data.curves) {
    const Alignment al = viterbi_align(curve, model);
    for (Eigen::Index j = 0; j < curve.length(); ++j) {
      const Eigen::VectorXd r = curve.points.row(j).transpose() - al.offset -
                                model.means[al.component].row(al.path[j]).transpose();
      ss += r.squaredNorm();
      count += curve.dims();
    }
  }
  return std::sqrt(ss / static_cast<double>(count));
}

std::vector<CVReport> compare_variants(const CurveSet& data, const ModelConfig& base,
                                       const std::vector<Variant>& variants, int folds,
                                       int n_starts, std::uint64_t seed) {
  std::vector<CVReport> out;
  out.reserve(variants.size());
  for (const Variant v : variants) {
    CVReport r = cross_validate(data, variant_config(base, v), folds, n_starts, seed);
    r.config_label = variant_label(v);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace warpmix
