#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "warpmix/em.hpp"
#include "warpmix/inference.hpp"
#include "warpmix/io.hpp"
#include "warpmix/synth.hpp"

using namespace warpmix;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("warpmix_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("curve CSV loads grouped and sorted") {
  TempDir dir;
  const std::string path = dir.file("curves.csv");
  write(path,
        "curve_id,step,d0\n"
        "c1,0,1.5\n"
        "c2,1,4.0\n"
        "c1,1,2.5\n"
        "c2,0,3.0\n");
  const CurveSet data = load_curves_csv(path);
  REQUIRE(data.size() == 2);
  CHECK(data.dims() == 1);
  CHECK(data.curves[0].id == "c1");
  CHECK(data.curves[0].points(0, 0) == 1.5);
  CHECK(data.curves[0].points(1, 0) == 2.5);
  CHECK(data.curves[1].points(0, 0) == 3.0);
}

TEST_CASE("curve CSV errors name the offending row and column") {
  TempDir dir;
  const std::string gap = dir.file("gap.csv");
  write(gap, "curve_id,step,d0\nc1,0,1.0\nc1,2,2.0\n");
  CHECK_THROWS_WITH_AS(load_curves_csv(gap), doctest::Contains("gap at step 1"), DataError);

  const std::string missing = dir.file("missing.csv");
  write(missing, "curve_id,step,value\nc1,0,1.0\n");
  CHECK_THROWS_AS(load_curves_csv(missing), DataError);

  const std::string bad_value = dir.file("bad.csv");
  write(bad_value, "curve_id,step,d0\nc1,0,oops\n");
  CHECK_THROWS_WITH_AS(load_curves_csv(bad_value), doctest::Contains("row 2"), DataError);

  const std::string nonfinite = dir.file("inf.csv");
  write(nonfinite, "curve_id,step,d0\nc1,0,inf\n");
  CHECK_THROWS_AS(load_curves_csv(nonfinite), DataError);

  const std::string ragged = dir.file("ragged.csv");
  write(ragged, "curve_id,step,d0,d1\nc1,0,1.0,2.0\nc1,1,1.0\n");
  CHECK_THROWS_AS(load_curves_csv(ragged), DataError);

  const std::string dup = dir.file("dup.csv");
  write(dup, "curve_id,step,d0\nc1,0,1.0\nc1,0,2.0\n");
  CHECK_THROWS_WITH_AS(load_curves_csv(dup), doctest::Contains("duplicate step"), DataError);

  CHECK_THROWS_AS(load_curves_csv(dir.file("does_not_exist.csv")), IoError);
}

TEST_CASE("a 614-curve 3-dimensional file round-trips with the right shape") {
  TempDir dir;
  const WarpMixtureModel tpl =
      make_template_model(3, 3, 9, 1, 60, TemplateShape::bump, 2.0, 0.3, true);
  std::mt19937_64 rng(614);
  const auto [data, latents] = sample_dataset(tpl, 614, 12, 24, rng, 1.0);
  const std::string path = dir.file("many_curves.csv");
  save_curves_csv(data, path);
  const CurveSet loaded = load_curves_csv(path);
  CHECK(loaded.size() == 614);
  CHECK(loaded.dims() == 3);
  CHECK(loaded.max_length() == data.max_length());
  for (int i : {0, 100, 613})
    CHECK(loaded.curves[i].points == data.curves[i].points);  // exact decimal round-trip
}

TEST_CASE("model save/load reproduces every parameter exactly") {
  TempDir dir;
  std::mt19937_64 rng(7);
  for (const bool tied : {true, false}) {
    const WarpMixtureModel m = testutil::random_model(rng, 3, 4, 2, 14, 2, true, tied, true);
    const std::string path = dir.file(tied ? "tied.json" : "untied.json");
    save_model(m, path);
    const WarpMixtureModel r = load_model(path);
    CHECK(r.weights == m.weights);
    CHECK(r.init_dist == m.init_dist);
    CHECK(r.allow_stay == m.allow_stay);
    CHECK(r.tie_transitions == m.tie_transitions);
    CHECK(r.offsets_enabled == m.offsets_enabled);
    for (int k = 0; k < 3; ++k) {
      CHECK(r.step_dist[k] == m.step_dist[k]);
      CHECK(r.means[k] == m.means[k]);
      CHECK(r.vars[k] == m.vars[k]);
    }
    CHECK(check_model(r).empty());
  }
}

TEST_CASE("tampered model files are rejected") {
  TempDir dir;
  std::mt19937_64 rng(8);
  const WarpMixtureModel m = testutil::random_model(rng, 2, 2, 1, 8, 1, true, true, false);
  const std::string path = dir.file("model.json");
  save_model(m, path);

  std::string text = slurp(path);
  const std::string weights_key = "\"weights\": [";
  const auto at = text.find(weights_key) + weights_key.size();
  text.insert(at, "0.9999, ");  // now K+1 weights that do not sum to 1
  write(path, text);
  CHECK_THROWS(load_model(path));

  const std::string versioned = dir.file("future.json");
  save_model(m, versioned);
  std::string vtext = slurp(versioned);
  const auto vpos = vtext.find("\"schema_version\": 1");
  vtext.replace(vpos, std::string("\"schema_version\": 1").size(), "\"schema_version\": 9");
  write(versioned, vtext);
  CHECK_THROWS_WITH_AS(load_model(versioned), doctest::Contains("schema version"), IoError);

  const std::string garbage = dir.file("garbage.json");
  write(garbage, "not json at all{");
  CHECK_THROWS_AS(load_model(garbage), IoError);
}

TEST_CASE("a hand-written minimal model loads and scores") {
  TempDir dir;
  const std::string path = dir.file("minimal.json");
  write(path, R"({
    "schema_version": 1,
    "clusters": 1, "dims": 1, "grid_len": 2, "max_shift": 1, "max_skip": 0,
    "allow_stay": false, "tie_transitions": true, "offsets_enabled": false,
    "weights": [1.0],
    "init_dist": [[1.0]],
    "step_dist": [[[0.0, 1.0]]],
    "means": [[[0.0], [1.0]]],
    "variances": [[[1.0], [1.0]]]
  })");
  const WarpMixtureModel m = load_model(path);
  Curve c{"x", Eigen::MatrixXd::Zero(1, 1)};
  // Single point at the mode of a unit normal.
  CHECK(curve_loglik(c, m) == doctest::Approx(-0.9189385332046727).epsilon(1e-12));
}

TEST_CASE("alignment export covers every observation; empty data gives a bare header") {
  TempDir dir;
  const WarpMixtureModel tpl =
      make_template_model(2, 2, 2, 1, 12, TemplateShape::bump, 3.0, 0.1, true);
  std::mt19937_64 rng(9);
  const auto [data, latents] = sample_dataset(tpl, 4, 3, 5, rng, 0.5);

  const std::string path = dir.file("alignments.csv");
  export_alignments(tpl, data, path);
  const std::string text = slurp(path);
  Eigen::Index expected_rows = 0;
  for (const auto& c : data.curves) expected_rows += c.length();
  CHECK(std::count(text.begin(), text.end(), '\n') == expected_rows + 1);
  CHECK(text.rfind("curve_id,step,component,grid_position,offset_d0,offset_d1,residual_d0,"
                   "residual_d1\n", 0) == 0);

  const std::string empty_path = dir.file("empty.csv");
  export_alignments(tpl, CurveSet{}, empty_path);
  CHECK(slurp(empty_path) ==
        "curve_id,step,component,grid_position,offset_d0,offset_d1,residual_d0,residual_d1\n");
}

TEST_CASE("cluster bands have definitional half-width and re-import exactly") {
  TempDir dir;
  std::mt19937_64 rng(10);
  const WarpMixtureModel m = testutil::random_model(rng, 2, 2, 0, 6, 2, false, true, false);
  const std::string path = dir.file("bands.csv");
  export_cluster_bands(m, path);

  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "component,grid_position,dim,mean,lower,upper");
  int rows = 0;
  while (std::getline(in, line)) {
    int k, t, d;
    char comma;
    double mean, lower, upper;
    std::istringstream ss(line);
    ss >> k >> comma >> t >> comma >> d >> comma >> mean >> comma >> lower >> comma >> upper;
    CHECK(mean == m.means[k](t, d));  // shortest round-trip decimals reparse exactly
    CHECK(upper - mean == doctest::Approx(2.0 * std::sqrt(m.vars[k](t, d))).epsilon(1e-12));
    CHECK(mean - lower == doctest::Approx(2.0 * std::sqrt(m.vars[k](t, d))).epsilon(1e-12));
    ++rows;
  }
  CHECK(rows == 2 * 6 * 2);
}

TEST_CASE("atomic writes leave no temporary behind") {
  TempDir dir;
  const std::string path = dir.file("out.txt");
  write_text_atomic(path, "payload");
  CHECK(slurp(path) == "payload");
  CHECK(!fs::exists(path + ".tmp"));
}

TEST_CASE("digest changes with content") {
  TempDir dir;
  const std::string a = dir.file("a.txt"), b = dir.file("b.txt");
  write(a, "one");
  write(b, "two");
  CHECK(file_digest_hex(a) != file_digest_hex(b));
  write(b, "one");
  CHECK(file_digest_hex(a) == file_digest_hex(b));
}

TEST_CASE("format_double round-trips exactly") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(-1e6, 1e6);
  for (int i = 0; i < 200; ++i) {
    const double v = unif(rng) * std::pow(10.0, static_cast<int>(rng() % 13) - 6);
    CHECK(std::stod(format_double(v)) == v);
  }
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

}  // TEST_SUITE
