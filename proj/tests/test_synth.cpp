#include <doctest.h>

#include "helpers.hpp"
#include "warpmix/eval.hpp"
#include "warpmix/synth.hpp"

using namespace warpmix;

TEST_SUITE("synth") {

TEST_CASE("sampled paths satisfy the alignment invariants") {
  std::mt19937_64 model_rng(1), rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const bool stay = trial % 2 == 0;
    const int max_skip = trial % 3 == 0 ? 0 : 1;
    const WarpMixtureModel m =
        testutil::random_model(model_rng, 2, 3, max_skip, 14, 1, stay, true, false);
    const auto [curve, rec] = sample_curve(m, 6, rng, 0.0);
    CHECK(rec.start < 3);
    CHECK(rec.path[0] == rec.start);
    CHECK(rec.path.back() < 14);
    for (size_t j = 1; j < rec.path.size(); ++j) {
      const int step = rec.path[j] - rec.path[j - 1];
      CHECK(step >= (stay ? 0 : 1));
      CHECK(step <= max_skip + 1);
      if (step == 0) CHECK(stay);
    }
  }
}

TEST_CASE("noise-free linear samples reproduce the mean segment") {
  WarpMixtureModel m = make_template_model(1, 2, 1, 0, 10, TemplateShape::ramp, 2.0, 1.0, false);
  for (auto& v : m.vars) v.setConstant(1e-18);
  std::mt19937_64 rng(3);
  const auto [curve, rec] = sample_curve(m, 6, rng, 0.0);
  CHECK(rec.start == 0);
  CHECK((curve.points - m.means[0].topRows(6)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("single start position forces g1 = 0") {
  WarpMixtureModel m = make_template_model(2, 1, 1, 1, 12, TemplateShape::bump, 1.0, 0.1, true);
  std::mt19937_64 rng(4);
  for (int i = 0; i < 50; ++i) CHECK(sample_curve(m, 4, rng, 0.5).second.start == 0);
}

TEST_CASE("start frequencies match the initial distribution") {
  std::mt19937_64 model_rng(5);
  WarpMixtureModel m = testutil::random_model(model_rng, 1, 4, 0, 8, 1, false, true, false);
  const int n = 100000;
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(4);
  std::mt19937_64 rng(6);
  for (int i = 0; i < n; ++i) counts(sample_curve(m, 2, rng, 0.0).second.start) += 1.0;
  for (int g1 = 0; g1 < 4; ++g1) {
    const double p = m.init_dist(0, g1);
    const double sigma = std::sqrt(p * (1 - p) * n);
    CHECK(std::abs(counts(g1) - p * n) < 3.0 * sigma);
  }
}

TEST_CASE("component frequencies match the mixture weights") {
  std::mt19937_64 model_rng(7);
  WarpMixtureModel m = testutil::random_model(model_rng, 3, 2, 0, 8, 1, false, true, false);
  const int n = 60000;
  std::mt19937_64 rng(8);
  auto [data, latents] = sample_dataset(m, n, 2, 4, rng, 0.0);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(3);
  for (const auto& rec : latents) counts(rec.component) += 1.0;
  for (int k = 0; k < 3; ++k) {
    const double p = m.weights(k);
    const double sigma = std::sqrt(p * (1 - p) * n);
    CHECK(std::abs(counts(k) - p * n) < 3.0 * sigma);
  }
}

TEST_CASE("datasets are deterministic given the seed") {
  WarpMixtureModel m = make_template_model(2, 2, 3, 1, 16, TemplateShape::sine, 2.0, 0.2, true);
  std::mt19937_64 rng_a(11), rng_b(11);
  const auto [da, la] = sample_dataset(m, 25, 3, 7, rng_a, 1.0);
  const auto [db, lb] = sample_dataset(m, 25, 3, 7, rng_b, 1.0);
  REQUIRE(da.size() == db.size());
  for (Eigen::Index i = 0; i < da.size(); ++i) {
    CHECK(da.curves[i].id == db.curves[i].id);
    CHECK(da.curves[i].points == db.curves[i].points);
    CHECK(la[i].path == lb[i].path);
  }

  // Singleton wrapper: replay the length draw, then the curve draw.
  std::mt19937_64 rng_c(12), rng_d(12);
  const auto single = sample_dataset(m, 1, 5, 5, rng_c, 0.3);
  const int len = std::uniform_int_distribution<int>(5, 5)(rng_d);
  const auto direct = sample_curve(m, len, rng_d, 0.3);
  CHECK(single.first.curves[0].points == direct.first.points);
}

TEST_CASE("template separation scales pairwise mean distances linearly") {
  for (const TemplateShape shape :
       {TemplateShape::bump, TemplateShape::ramp, TemplateShape::sine}) {
    const WarpMixtureModel at1 =
        make_template_model(3, 2, 2, 1, 15, shape, 1.0, 0.1, true);
    const WarpMixtureModel at2 =
        make_template_model(3, 2, 2, 1, 15, shape, 2.0, 0.1, true);
    for (int a = 0; a < 3; ++a)
      for (int b = a + 1; b < 3; ++b) {
        const double d1 = (at1.means[a] - at1.means[b]).norm();
        const double d2 = (at2.means[a] - at2.means[b]).norm();
        CHECK(d1 > 0.0);
        CHECK(d2 == doctest::Approx(2.0 * d1).epsilon(1e-12));
      }
  }

  const WarpMixtureModel flat =
      make_template_model(3, 1, 2, 0, 10, TemplateShape::bump, 0.0, 0.1, false);
  CHECK((flat.means[0] - flat.means[1]).cwiseAbs().maxCoeff() == 0.0);
  CHECK((flat.means[1] - flat.means[2]).cwiseAbs().maxCoeff() == 0.0);

  const WarpMixtureModel single =
      make_template_model(1, 1, 1, 0, 6, TemplateShape::bump, 2.0, 0.1, false);
  CHECK(single.components() == 1);
  CHECK(check_model(single).empty());
}

TEST_CASE("template models pass the model invariant checks") {
  for (int s = 0; s <= 1; ++s)
    for (const bool stay : {false, true}) {
      const WarpMixtureModel m = make_template_model(
          2, 2, 3, s, 18, TemplateShape::bump, 2.0, 0.2, stay);
      CHECK(check_model(m).empty());
    }
}


TEST_CASE("the true model outscores any single-component collapse of it") {
  // Holds once the separation dominates the noise; 3.0 is comfortably past
  // the threshold for unit-variance-scale noise.
  const int T = 14;
  WarpMixtureModel truth =
      make_template_model(3, 1, 2, 0, T, TemplateShape::sine, 3.0, 0.2, false);
  truth.offsets_enabled = false;
  std::mt19937_64 rng(77);
  CurveSet fresh;
  {
    auto sampled = sample_dataset(truth, 60, 8, 12, rng, 0.0);
    fresh = std::move(sampled.first);
  }

  const double full_score = heldout_logp(truth, fresh);
  for (int k = 0; k < 3; ++k) {
    WarpMixtureModel collapsed = truth;
    collapsed.weights = Eigen::VectorXd::Ones(1);
    collapsed.init_dist = truth.init_dist.row(k);
    collapsed.step_dist = {truth.step_dist[k]};
    collapsed.means = {truth.means[k]};
    collapsed.vars = {truth.vars[k]};
    CHECK(full_score > heldout_logp(collapsed, fresh));
  }
}

}  // TEST_SUITE
