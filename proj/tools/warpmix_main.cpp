// warpmix: joint clustering and time-warp alignment of curve sets.

#include <chrono>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "warpmix/em.hpp"
#include "warpmix/eval.hpp"
#include "warpmix/inference.hpp"
#include "warpmix/io.hpp"
#include "warpmix/synth.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

using warpmix::ModelConfig;

struct ConfigFlags {
  ModelConfig cfg;
  std::string stay = "auto";
  std::string offsets = "on";
  std::string tied = "on";

  void attach(CLI::App* cmd) {
    cmd->add_option("-k,--clusters", cfg.clusters, "number of mixture components");
    cmd->add_option("--max-shift", cfg.max_shift, "allowed start positions M");
    cmd->add_option("--max-skip", cfg.max_skip, "maximum skip S");
    cmd->add_option("--stay", stay, "allow repeats: on|off|auto (auto: on when S > 0)")
        ->check(CLI::IsMember({"on", "off", "auto"}));
    cmd->add_option("--offsets", offsets, "measurement offsets: on|off")
        ->check(CLI::IsMember({"on", "off"}));
    cmd->add_option("--tied", tied, "tie step distributions across grid positions: on|off")
        ->check(CLI::IsMember({"on", "off"}));
    cmd->add_option("--grid-len", cfg.grid_len, "time grid length T (0 = derive)");
    cmd->add_option("--tol", cfg.tol, "relative objective-change tolerance");
    cmd->add_option("--max-iters", cfg.max_iters, "EM iteration cap");
    cmd->add_option("--alpha", cfg.dirichlet_alpha, "Dirichlet pseudo-count");
  }

  ModelConfig resolve() const {
    ModelConfig out = cfg;
    out.allow_stay = stay == "auto" ? cfg.max_skip > 0 : stay == "on";
    out.offsets_enabled = offsets == "on";
    out.tie_transitions = tied == "on";
    return out;
  }
};

nlohmann::json config_json(const ModelConfig& cfg) {
  return {{"clusters", cfg.clusters},
          {"max_shift", cfg.max_shift},
          {"max_skip", cfg.max_skip},
          {"allow_stay", cfg.allow_stay},
          {"grid_len", cfg.grid_len},
          {"offsets_enabled", cfg.offsets_enabled},
          {"tie_transitions", cfg.tie_transitions},
          {"dirichlet_alpha", cfg.dirichlet_alpha},
          {"variance_floor_frac", cfg.variance_floor_frac},
          {"tol", cfg.tol},
          {"max_iters", cfg.max_iters}};
}

/* One manifest per run, written next to the primary output. wall_ms is the
 * only field that varies between identical runs. */
struct ManifestWriter {
  nlohmann::json doc;
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  ManifestWriter(const std::string& command, std::uint64_t seed) {
    doc["command"] = command;
    doc["seed"] = seed;
    doc["tool_version"] = kVersion;
    doc["inputs"] = nlohmann::json::object();
  }
  void input(const std::string& path) { doc["inputs"][path] = warpmix::file_digest_hex(path); }
  void config(const nlohmann::json& cfg) { doc["config"] = cfg; }
  void write(const std::string& primary_output) {
    doc["wall_ms"] = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
    warpmix::write_text_atomic(primary_output + ".manifest.json", doc.dump(2) + "\n");
  }
};

int run(int argc, char** argv) {
  CLI::App app{"joint clustering and time-warp alignment of curve sets"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "fit a model to a curve CSV");
  ConfigFlags fit_flags;
  std::string fit_data, fit_out;
  int fit_starts = 5;
  std::uint64_t fit_seed = 0;
  fit_cmd->add_option("--data", fit_data, "input curve CSV")->required();
  fit_cmd->add_option("--out", fit_out, "output model JSON")->required();
  fit_flags.attach(fit_cmd);
  fit_cmd->add_option("--starts", fit_starts, "random EM restarts");
  fit_cmd->add_option("--seed", fit_seed, "random seed");

  // score
  auto* score_cmd = app.add_subcommand("score", "held-out log density of a curve CSV");
  std::string score_data, score_model, score_out;
  score_cmd->add_option("--data", score_data, "input curve CSV")->required();
  score_cmd->add_option("--model", score_model, "model JSON")->required();
  score_cmd->add_option("--out", score_out, "optional JSON report");

  // align
  auto* align_cmd = app.add_subcommand("align", "Viterbi alignments for every curve");
  std::string align_data, align_model, align_out;
  align_cmd->add_option("--data", align_data, "input curve CSV")->required();
  align_cmd->add_option("--model", align_model, "model JSON")->required();
  align_cmd->add_option("--out", align_out, "output alignment CSV")->required();

  // cv
  auto* cv_cmd = app.add_subcommand("cv", "cross-validated logP score");
  ConfigFlags cv_flags;
  std::string cv_data, cv_out;
  int cv_folds = 10, cv_starts = 5;
  std::uint64_t cv_seed = 0;
  cv_cmd->add_option("--data", cv_data, "input curve CSV")->required();
  cv_flags.attach(cv_cmd);
  cv_cmd->add_option("--folds", cv_folds, "number of folds");
  cv_cmd->add_option("--starts", cv_starts, "random EM restarts per fold");
  cv_cmd->add_option("--seed", cv_seed, "random seed");
  cv_cmd->add_option("--out", cv_out, "optional JSON report");

  // compare
  auto* cmp_cmd = app.add_subcommand("compare", "cross-validate model variants");
  ConfigFlags cmp_flags;
  std::string cmp_data, cmp_out, cmp_variants = "none,shift,warp,both";
  int cmp_folds = 10, cmp_starts = 5;
  std::uint64_t cmp_seed = 0;
  cmp_cmd->add_option("--data", cmp_data, "input curve CSV")->required();
  cmp_flags.attach(cmp_cmd);
  cmp_cmd->add_option("--variants", cmp_variants, "comma list of none,shift,warp,both");
  cmp_cmd->add_option("--folds", cmp_folds, "number of folds");
  cmp_cmd->add_option("--starts", cmp_starts, "random EM restarts per fold");
  cmp_cmd->add_option("--seed", cmp_seed, "random seed");
  cmp_cmd->add_option("--out", cmp_out, "optional CSV report");

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "sample curves from a template model");
  ConfigFlags sim_flags;
  std::string sim_out, sim_latents, sim_shape = "bump";
  int sim_n = 100, sim_dims = 1, sim_lmin = 8, sim_lmax = 12;
  double sim_separation = 4.0, sim_noise = 0.1, sim_offset_sigma = 1.0;
  std::uint64_t sim_seed = 0;
  sim_cmd->add_option("--out", sim_out, "output curve CSV")->required();
  sim_flags.attach(sim_cmd);
  sim_cmd->add_option("-n,--n", sim_n, "number of curves");
  sim_cmd->add_option("--dims", sim_dims, "measurement dimensions D");
  sim_cmd->add_option("--shape", sim_shape, "template shape")
      ->check(CLI::IsMember({"bump", "ramp", "sine"}));
  sim_cmd->add_option("--separation", sim_separation, "cluster mean separation scale");
  sim_cmd->add_option("--noise-var", sim_noise, "emission variance");
  sim_cmd->add_option("--lmin", sim_lmin, "minimum curve length");
  sim_cmd->add_option("--lmax", sim_lmax, "maximum curve length");
  sim_cmd->add_option("--offset-sigma", sim_offset_sigma, "offset standard deviation");
  sim_cmd->add_option("--seed", sim_seed, "random seed");
  sim_cmd->add_option("--latents", sim_latents, "optional ground-truth latent CSV");

  // export
  auto* exp_cmd = app.add_subcommand("export", "plot-ready model exports");
  std::string exp_model, exp_data, exp_bands, exp_alignments;
  exp_cmd->add_option("--model", exp_model, "model JSON")->required();
  exp_cmd->add_option("--data", exp_data, "curve CSV (needed for --alignments)");
  exp_cmd->add_option("--bands", exp_bands, "cluster mean +/- 2 stddev CSV");
  exp_cmd->add_option("--alignments", exp_alignments, "alignment CSV");

  CLI11_PARSE(app, argc, argv);

  if (fit_cmd->parsed()) {
    const ModelConfig cfg = fit_flags.resolve();
    ManifestWriter manifest("fit", fit_seed);
    manifest.input(fit_data);
    const warpmix::CurveSet data = warpmix::load_curves_csv(fit_data);
    const warpmix::FitResult result = warpmix::fit_multi_start(data, cfg, fit_starts, fit_seed);
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
    warpmix::save_model(result.model, fit_out);
    ModelConfig resolved = warpmix::validate_config(cfg, data);
    manifest.config(config_json(resolved));
    manifest.doc["starts"] = fit_starts;
    manifest.write(fit_out);
    std::cout << "fit: objective " << warpmix::format_double(result.objective_trace.back())
              << " after " << result.iterations << " iterations ("
              << (result.converged ? "converged" : "iteration cap") << "), winning seed "
              << result.seed << "\n";
    return 0;
  }

  if (score_cmd->parsed()) {
    const warpmix::WarpMixtureModel model = warpmix::load_model(score_model);
    const warpmix::CurveSet data = warpmix::load_curves_csv(score_data);
    // Offsets pair each observation with a grid position linearly, and without
    // stays no path can absorb extra length; either way the full segment must
    // fit. With offsets off and stays on, longer curves are scoreable.
    const int needed = model.max_shift() - 1 + static_cast<int>(data.max_length());
    if ((model.offsets_enabled || !model.allow_stay) && model.grid_len() < needed)
      throw warpmix::DataError("curves too long for the model grid (need " +
                               std::to_string(needed) + " positions, model has " +
                               std::to_string(model.grid_len()) + ")");
    const double logp = warpmix::heldout_logp(model, data);
    std::cout << "heldout_logp " << warpmix::format_double(logp) << "\n";
    if (!score_out.empty()) {
      ManifestWriter manifest("score", 0);
      manifest.input(score_data);
      manifest.input(score_model);
      nlohmann::json doc{{"mean_logp", logp},
                         {"n_curves", data.size()},
                         {"model", score_model}};
      warpmix::write_text_atomic(score_out, doc.dump(2) + "\n");
      manifest.write(score_out);
    }
    return 0;
  }

  if (align_cmd->parsed()) {
    ManifestWriter manifest("align", 0);
    manifest.input(align_data);
    manifest.input(align_model);
    const warpmix::WarpMixtureModel model = warpmix::load_model(align_model);
    const warpmix::CurveSet data = warpmix::load_curves_csv(align_data);
    warpmix::export_alignments(model, data, align_out);
    manifest.write(align_out);
    std::cout << "align: wrote " << align_out << "\n";
    return 0;
  }

  if (cv_cmd->parsed()) {
    const ModelConfig cfg = cv_flags.resolve();
    ManifestWriter manifest("cv", cv_seed);
    manifest.input(cv_data);
    const warpmix::CurveSet data = warpmix::load_curves_csv(cv_data);
    const warpmix::CVReport report =
        warpmix::cross_validate(data, cfg, cv_folds, cv_starts, cv_seed);
    std::cout << "cv (" << report.config_label << "): mean logP "
              << warpmix::format_double(report.mean_logp) << " over " << report.folds
              << " folds\n";
    for (int f = 0; f < report.folds; ++f)
      std::cout << "  fold " << f << ": " << warpmix::format_double(report.per_fold_logp[f])
                << "\n";
    if (!cv_out.empty()) {
      nlohmann::json doc{{"folds", report.folds},
                         {"per_fold_logp", report.per_fold_logp},
                         {"mean_logp", report.mean_logp},
                         {"config_label", report.config_label}};
      warpmix::write_text_atomic(cv_out, doc.dump(2) + "\n");
      manifest.config(config_json(warpmix::validate_config(cfg, data)));
      manifest.doc["folds"] = cv_folds;
      manifest.doc["starts"] = cv_starts;
      manifest.write(cv_out);
    }
    return 0;
  }

  if (cmp_cmd->parsed()) {
    const ModelConfig cfg = cmp_flags.resolve();
    ManifestWriter manifest("compare", cmp_seed);
    manifest.input(cmp_data);
    const warpmix::CurveSet data = warpmix::load_curves_csv(cmp_data);
    std::vector<warpmix::Variant> variants;
    std::istringstream names(cmp_variants);
    std::string name;
    while (std::getline(names, name, ',')) {
      if (name == "none") variants.push_back(warpmix::Variant::none);
      else if (name == "shift") variants.push_back(warpmix::Variant::shift);
      else if (name == "warp") variants.push_back(warpmix::Variant::warp);
      else if (name == "both") variants.push_back(warpmix::Variant::both);
      else throw warpmix::ConfigError("unknown variant '" + name + "'");
    }
    const auto reports =
        warpmix::compare_variants(data, cfg, variants, cmp_folds, cmp_starts, cmp_seed);
    std::ostringstream table;
    table << "variant,mean_logp";
    for (int f = 0; f < cmp_folds; ++f) table << ",fold" << f;
    table << "\n";
    for (const auto& r : reports) {
      table << r.config_label << "," << warpmix::format_double(r.mean_logp);
      for (double v : r.per_fold_logp) table << "," << warpmix::format_double(v);
      table << "\n";
      std::cout << "compare (" << r.config_label << "): mean logP "
                << warpmix::format_double(r.mean_logp) << "\n";
    }
    if (!cmp_out.empty()) {
      warpmix::write_text_atomic(cmp_out, table.str());
      manifest.config(config_json(cfg));
      manifest.doc["variants"] = cmp_variants;
      manifest.doc["folds"] = cmp_folds;
      manifest.doc["starts"] = cmp_starts;
      manifest.write(cmp_out);
    }
    return 0;
  }

  if (sim_cmd->parsed()) {
    const ModelConfig cfg = sim_flags.resolve();
    ManifestWriter manifest("simulate", sim_seed);
    if (sim_lmin < 1 || sim_lmax < sim_lmin)
      throw warpmix::ConfigError("need 1 <= lmin <= lmax");
    if (sim_n < 1) throw warpmix::ConfigError("need at least one curve");
    if (sim_dims < 1) throw warpmix::ConfigError("need at least one measurement dimension");
    const int grid = cfg.grid_len > 0
                         ? cfg.grid_len
                         : warpmix::default_grid_length(cfg.max_shift, cfg.max_skip, sim_lmax);
    warpmix::TemplateShape shape = warpmix::TemplateShape::bump;
    if (sim_shape == "ramp") shape = warpmix::TemplateShape::ramp;
    if (sim_shape == "sine") shape = warpmix::TemplateShape::sine;
    const warpmix::WarpMixtureModel model =
        warpmix::make_template_model(cfg.clusters, sim_dims, cfg.max_shift, cfg.max_skip, grid,
                                     shape, sim_separation, sim_noise, cfg.allow_stay);
    std::mt19937_64 rng(sim_seed);
    const auto [data, latents] = warpmix::sample_dataset(model, sim_n, sim_lmin, sim_lmax, rng,
                                                         sim_offset_sigma);
    warpmix::save_curves_csv(data, sim_out);
    if (!sim_latents.empty()) {
      std::ostringstream out;
      out << "curve_id,step,component,start,grid_position";
      for (int d = 0; d < sim_dims; ++d) out << ",offset_d" << d;
      out << "\n";
      for (int i = 0; i < sim_n; ++i)
        for (size_t j = 0; j < latents[i].path.size(); ++j) {
          out << data.curves[i].id << "," << j << "," << latents[i].component << ","
              << latents[i].start << "," << latents[i].path[j];
          for (int d = 0; d < sim_dims; ++d)
            out << "," << warpmix::format_double(latents[i].offset(d));
          out << "\n";
        }
      warpmix::write_text_atomic(sim_latents, out.str());
    }
    nlohmann::json sim_cfg = config_json(cfg);
    sim_cfg["grid_len"] = grid;
    sim_cfg["n"] = sim_n;
    sim_cfg["dims"] = sim_dims;
    sim_cfg["shape"] = sim_shape;
    sim_cfg["separation"] = sim_separation;
    sim_cfg["noise_var"] = sim_noise;
    sim_cfg["lmin"] = sim_lmin;
    sim_cfg["lmax"] = sim_lmax;
    sim_cfg["offset_sigma"] = sim_offset_sigma;
    manifest.config(sim_cfg);
    manifest.write(sim_out);
    std::cout << "simulate: wrote " << sim_n << " curves to " << sim_out << "\n";
    return 0;
  }

  if (exp_cmd->parsed()) {
    if (exp_bands.empty() && exp_alignments.empty())
      throw warpmix::ConfigError("export: nothing to do; pass --bands and/or --alignments");
    const warpmix::WarpMixtureModel model = warpmix::load_model(exp_model);
    ManifestWriter manifest("export", 0);
    manifest.input(exp_model);
    if (!exp_bands.empty()) warpmix::export_cluster_bands(model, exp_bands);
    if (!exp_alignments.empty()) {
      if (exp_data.empty())
        throw warpmix::ConfigError("export --alignments requires --data");
      manifest.input(exp_data);
      const warpmix::CurveSet data = warpmix::load_curves_csv(exp_data);
      warpmix::export_alignments(model, data, exp_alignments);
    }
    manifest.write(exp_bands.empty() ? exp_alignments : exp_bands);
    std::cout << "export: done\n";
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const warpmix::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const warpmix::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const warpmix::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
