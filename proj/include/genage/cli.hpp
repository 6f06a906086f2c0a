#pragma once

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "genage/evaluation.hpp"
#include "genage/io.hpp"
#include "genage/pls.hpp"
#include "genage/synth.hpp"
#include "genage/trainer.hpp"

namespace genage {

namespace cli_detail {

inline std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag,
                                  std::optional<std::uint64_t> fallback = std::nullopt) {
  if (flag) return *flag;
  if (const char* env = std::getenv("GENAGE_SEED"); env && *env) {
    std::uint64_t v = 0;
    const std::string_view s(env);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      throw Error(ErrorKind::Usage, "GENAGE_SEED must be a non-negative integer, got '" +
                                        std::string(s) + "'");
    }
    return v;
  }
  return fallback.value_or(42);
}

inline std::vector<Method> parse_methods(const std::string& list) {
  std::vector<Method> out;
  std::string item;
  std::istringstream ss(list);
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const Method m = parse_method(item);
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  }
  if (out.empty()) throw Error(ErrorKind::Usage, "empty --variants list");
  return out;
}

inline AgeColumn parse_age_mode(const std::string& s) {
  if (s == "auto") return AgeColumn::Auto;
  if (s == "rank") return AgeColumn::Rank;
  if (s == "year") return AgeColumn::Year;
  throw Error(ErrorKind::Usage, "--age must be auto, rank or year");
}

struct HyperFlags {
  double lambda1 = 1.0, lambda2 = 1.0, lambda3 = 1000.0, tol = 1e-6;
  int t_max = 2;

  void add(CLI::App* app) {
    app->add_option("--lambda1", lambda1, "Gender hinge loss weight")->capture_default_str();
    app->add_option("--lambda2", lambda2, "Ordinal slack weight")->capture_default_str();
    app->add_option("--lambda3", lambda3, "Orthogonality coupling weight")->capture_default_str();
    app->add_option("--tmax", t_max, "Alternation iterations")->capture_default_str();
    app->add_option("--tol", tol, "Solver and early-exit tolerance")->capture_default_str();
  }
  HyperParams to_hyper(Variant v) const {
    HyperParams h;
    h.lambda1 = lambda1;
    h.lambda2 = lambda2;
    h.lambda3 = lambda3;
    h.t_max = t_max;
    h.tol = tol;
    h.variant = v;
    h.validate();
    return h;
  }
};

struct GridFlags {
  std::vector<double> lambda1{1.0}, lambda2{1.0}, lambda3{10.0, 100.0, 1000.0};

  void add(CLI::App* app) {
    app->add_option("--grid-lambda1", lambda1, "CV grid for lambda1")->delimiter(',')->capture_default_str();
    app->add_option("--grid-lambda2", lambda2, "CV grid for lambda2")->delimiter(',')->capture_default_str();
    app->add_option("--grid-lambda3", lambda3, "CV grid for lambda3")->delimiter(',')->capture_default_str();
  }
  HyperGrid to_grid() const { return HyperGrid{lambda1, lambda2, lambda3}; }
};

inline Json cv_json(const CvResult& r) {
  Json entries = Json::array();
  for (const CvEntry& e : r.entries) {
    entries.push_back(Json{{"hyper", detail::hyper_json(e.hyper)},
                           {"fold_mae", e.fold_mae},
                           {"mean_mae", e.mean_mae}});
  }
  return Json{{"schema_version", kSchemaVersion},
              {"kind", "cv"},
              {"best", detail::hyper_json(r.best)},
              {"entries", entries}};
}

}  // namespace cli_detail

/// Entry point of the `genage` tool. Returns the process exit code: 0 on
/// success, 1 on a domain or I/O error, 2 on a usage error.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  using namespace cli_detail;
  CLI::App app{"Gender-aware ordinal age estimation"};
  app.name("genage");
  app.require_subcommand(1);
  app.fallthrough();
  std::optional<std::uint64_t> seed;
  app.add_option("--seed", seed, "Random seed (default: $GENAGE_SEED, then 42)");

  // generate
  auto* gen = app.add_subcommand("generate", "Write a synthetic dataset as CSV");
  std::string gen_config, gen_out;
  gen->add_option("--config", gen_config, "Synthetic config JSON (defaults when omitted)");
  gen->add_option("--out", gen_out, "Output CSV")->required();

  // fit
  auto* fitc = app.add_subcommand("fit", "Train a model");
  std::string fit_data, fit_out, fit_variant = "tt", fit_age = "auto";
  int fit_components = 0, fit_folds = 5;
  bool fit_cv = false;
  HyperFlags fit_hyper;
  GridFlags fit_grid;
  fitc->add_option("--data", fit_data, "Training CSV")->required();
  fitc->add_option("--variant", fit_variant, "direct, 2step, st, tt or pls")->capture_default_str();
  fitc->add_option("--out", fit_out, "Output model JSON")->required();
  fitc->add_option("--components", fit_components, "PLS components (0: choose by CV)");
  fitc->add_flag("--cv", fit_cv, "Select lambdas by cross-validation before fitting");
  fitc->add_option("--folds", fit_folds, "CV folds")->capture_default_str();
  fitc->add_option("--age", fit_age, "Age column: auto, rank or year")->capture_default_str();
  fit_hyper.add(fitc);
  fit_grid.add(fitc);

  // predict
  auto* pred = app.add_subcommand("predict", "Predict gender and age rank");
  std::string pred_model, pred_data, pred_out, pred_route = "predicted", pred_age = "auto";
  pred->add_option("--model", pred_model, "Model JSON")->required();
  pred->add_option("--data", pred_data, "CSV to score (labels are read but not used)")->required();
  pred->add_option("--out", pred_out, "Output CSV")->required();
  pred->add_option("--route", pred_route, "Ladder routing: predicted or oracle")->capture_default_str();
  pred->add_option("--age", pred_age, "Age column: auto, rank or year")->capture_default_str();

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Repeated train/test comparison of methods");
  std::string eval_data, eval_config, eval_out, eval_format = "json", eval_thresholds,
                                                 eval_variants = "direct,2step,st,tt,pls",
                                                 eval_age = "auto";
  int eval_runs = 10, eval_folds = 5, eval_pls_max = 10;
  std::vector<int> eval_sizes{20};
  bool eval_cv = false;
  HyperFlags eval_hyper;
  GridFlags eval_grid;
  auto* data_opt = eval->add_option("--data", eval_data, "Dataset CSV");
  auto* config_opt = eval->add_option("--config", eval_config,
                                      "Synthetic config JSON; one fresh draw per run");
  data_opt->excludes(config_opt);
  eval->add_option("--variants", eval_variants, "Comma-separated methods")->capture_default_str();
  eval->add_option("--runs", eval_runs, "Number of random splits")->capture_default_str();
  eval->add_option("--train-per-rank", eval_sizes, "Training samples per rank")
      ->delimiter(',')
      ->capture_default_str();
  eval->add_option("--out", eval_out, "Report path")->required();
  eval->add_option("--format", eval_format, "json or csv")->capture_default_str();
  eval->add_option("--thresholds", eval_thresholds, "Also write mean ladders as CSV");
  eval->add_flag("--cv", eval_cv, "Select lambdas by CV on each run's training set");
  eval->add_option("--folds", eval_folds, "CV folds")->capture_default_str();
  eval->add_option("--pls-max-components", eval_pls_max, "Largest PLS size tried by CV")
      ->capture_default_str();
  eval->add_option("--age", eval_age, "Age column: auto, rank or year")->capture_default_str();
  eval_hyper.add(eval);
  eval_grid.add(eval);

  // cv
  auto* cvc = app.add_subcommand("cv", "Grid search by stratified k-fold validation");
  std::string cv_data, cv_out, cv_variant = "tt", cv_age = "auto";
  int cv_folds = 5;
  HyperFlags cv_hyper;
  GridFlags cv_grid;
  cvc->add_option("--data", cv_data, "Dataset CSV")->required();
  cvc->add_option("--variant", cv_variant, "direct, 2step, st or tt")->capture_default_str();
  cvc->add_option("--folds", cv_folds, "Number of folds")->capture_default_str();
  cvc->add_option("--out", cv_out, "Output JSON (stdout when omitted)");
  cvc->add_option("--age", cv_age, "Age column: auto, rank or year")->capture_default_str();
  cv_hyper.add(cvc);
  cv_grid.add(cvc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    if (*gen) {
      SynthConfig cfg;
      if (!gen_config.empty()) {
        cfg = synth_config_from_json(detail::parse_json(read_file(gen_config), gen_config));
      }
      cfg.seed = resolve_seed(seed, gen_config.empty() ? std::nullopt : std::optional(cfg.seed));
      export_csv(generate(cfg), gen_out);
      return 0;
    }

    if (*fitc) {
      const Dataset ds = ingest_csv(fit_data, parse_age_mode(fit_age));
      const std::uint64_t s = resolve_seed(seed);
      if (fit_variant == "pls") {
        int a = fit_components;
        if (a <= 0) a = cross_validate_pls(ds, 10, fit_folds, s).best_components;
        write_file_atomic(fit_out, dump_json(pls_to_json(fit_pls(ds, a), ds.rank_years)));
        return 0;
      }
      HyperParams h = fit_hyper.to_hyper(parse_variant(fit_variant));
      if (fit_cv) h = cross_validate(ds, fit_grid.to_grid(), h, fit_folds, s).best;
      TrainConfig cfg;
      cfg.hyper = h;
      cfg.init_seed = s;
      write_file_atomic(fit_out, dump_json(model_to_json(fit(ds, cfg), ds.rank_years)));
      return 0;
    }

    if (*pred) {
      if (pred_route != "predicted" && pred_route != "oracle") {
        throw Error(ErrorKind::Usage, "--route must be predicted or oracle");
      }
      const Json j = detail::parse_json(read_file(pred_model), pred_model);
      const Dataset ds = ingest_csv(pred_data, parse_age_mode(pred_age));
      const std::vector<int> years = rank_years_from(j);
      std::string csv = years.empty() ? "index,gender,rank\n" : "index,gender,rank,age\n";
      auto emit = [&](std::size_t i, Gender g, int r) {
        csv += std::to_string(i) + (g == Gender::Male ? ",M," : ",F,") + std::to_string(r);
        if (!years.empty()) csv += "," + std::to_string(years[static_cast<std::size_t>(r - 1)]);
        csv += "\n";
      };
      const bool is_pls = j.is_object() && j.value("kind", "") == "pls";
      if (is_pls) {
        const PlsModel m = pls_from_json(j);
        for (std::size_t i = 0; i < ds.size(); ++i) {
          const PlsPrediction p = predict_pls(m, ds.sample(i).features);
          emit(i, p.gender, p.rank);
        }
      } else {
        const GenAgeModel m = model_from_json(j);
        for (std::size_t i = 0; i < ds.size(); ++i) {
          const Vector x = ds.sample(i).features;
          const Prediction p =
              pred_route == "oracle" ? predict_with_gender(m, x, ds.gender[i]) : predict(m, x);
          emit(i, p.gender, p.rank);
        }
      }
      write_file_atomic(pred_out, csv);
      return 0;
    }

    if (*eval) {
      if (eval_format != "json" && eval_format != "csv") {
        throw Error(ErrorKind::Usage, "--format must be json or csv");
      }
      ExperimentProtocol p;
      p.train_per_rank = eval_sizes;
      p.runs = eval_runs;
      p.seed = resolve_seed(seed);
      p.methods = parse_methods(eval_variants);
      p.hyper = eval_hyper.to_hyper(Variant::TT);
      if (eval_cv) p.cv_grid = eval_grid.to_grid();
      p.cv_folds = eval_folds;
      p.pls_max_components = eval_pls_max;

      Json context{{"runs", p.runs},
                   {"seed", p.seed},
                   {"train_per_rank", p.train_per_rank},
                   {"cv", eval_cv},
                   {"hyper", detail::hyper_json(p.hyper)}};
      if (eval_cv) {
        context["cv_grid"] = Json{{"lambda1", eval_grid.lambda1},
                                  {"lambda2", eval_grid.lambda2},
                                  {"lambda3", eval_grid.lambda3}};
      }
      std::vector<EvalReport> reports;
      std::vector<int> years;
      if (!eval_data.empty()) {
        const Dataset ds = ingest_csv(eval_data, parse_age_mode(eval_age));
        years = ds.rank_years;
        reports = run_experiment(ds, p);
      } else {
        SynthConfig cfg;
        if (!eval_config.empty()) {
          cfg = synth_config_from_json(detail::parse_json(read_file(eval_config), eval_config));
        }
        context["synth"] = synth_config_to_json(cfg);
        reports = run_experiment(cfg, p);
      }
      const std::string body = eval_format == "json"
                                   ? dump_json(report_to_json(reports, context, years))
                                   : report_to_csv(reports);
      // Both files are rendered before either is written.
      const std::string thresholds = eval_thresholds.empty() ? "" : thresholds_to_csv(reports);
      write_file_atomic(eval_out, body);
      if (!eval_thresholds.empty()) write_file_atomic(eval_thresholds, thresholds);
      return 0;
    }

    if (*cvc) {
      const Dataset ds = ingest_csv(cv_data, parse_age_mode(cv_age));
      const HyperParams base = cv_hyper.to_hyper(parse_variant(cv_variant));
      const CvResult r = cross_validate(ds, cv_grid.to_grid(), base, cv_folds, resolve_seed(seed));
      const std::string body = dump_json(cv_json(r));
      if (cv_out.empty()) {
        out << body;
      } else {
        write_file_atomic(cv_out, body);
      }
      return 0;
    }
  } catch (const Error& e) {
    err << "genage: " << e.what() << "\n";
    return e.kind() == ErrorKind::Usage ? 2 : 1;
  } catch (const std::exception& e) {
    err << "genage: error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace genage
