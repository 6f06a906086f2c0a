#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "genage/core.hpp"
#include "genage/pls.hpp"
#include "genage/synth.hpp"
#include "genage/trainer.hpp"

namespace genage {

inline double mae(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) {
    throw Error(ErrorKind::LengthMismatch,
                "mae: " + std::to_string(predicted.size()) + " predictions for " +
                    std::to_string(truth.size()) + " labels");
  }
  if (truth.empty()) throw Error(ErrorKind::Empty, "mae of an empty list");
  long total = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) total += std::abs(predicted[i] - truth[i]);
  return static_cast<double>(total) / static_cast<double>(truth.size());
}

inline double angle_deg(const Vector& u, const Vector& v) {
  if (u.size() != v.size()) throw Error(ErrorKind::DimensionMismatch, "angle: sizes differ");
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) throw Error(ErrorKind::ZeroVector, "angle with a zero vector");
  const double c = std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
  return std::acos(c) * 180.0 / std::numbers::pi;
}

/// Training methods compared by the harness: the four trainer variants and
/// the PLS baseline.
enum class Method { Direct, TwoStep, ST, TT, Pls };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::Direct: return "direct";
    case Method::TwoStep: return "2step";
    case Method::ST: return "st";
    case Method::TT: return "tt";
    case Method::Pls: return "pls";
  }
  return "tt";
}

inline Method parse_method(std::string_view s) {
  if (s == "pls") return Method::Pls;
  switch (parse_variant(s)) {
    case Variant::Direct: return Method::Direct;
    case Variant::TwoStep: return Method::TwoStep;
    case Variant::ST: return Method::ST;
    case Variant::TT: return Method::TT;
  }
  return Method::TT;
}

inline Variant variant_of(Method m) {
  switch (m) {
    case Method::Direct: return Variant::Direct;
    case Method::TwoStep: return Variant::TwoStep;
    case Method::ST: return Variant::ST;
    default: return Variant::TT;
  }
}

namespace detail {

// Portable Fisher-Yates; std::shuffle's output is library-specific.
inline void shuffle(std::vector<std::size_t>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Sample indices grouped by (gender, rank), each cell in index order.
inline std::vector<std::vector<std::size_t>> cells(const Dataset& ds) {
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(2 * ds.num_ranks));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const std::size_t g = ds.gender[i] == Gender::Male ? 0 : 1;
    out[g * static_cast<std::size_t>(ds.num_ranks) + static_cast<std::size_t>(ds.rank[i] - 1)]
        .push_back(i);
  }
  return out;
}

inline bool trainable(const Dataset& ds, std::span<const std::size_t> idx) {
  std::vector<bool> seen(static_cast<std::size_t>(2 * ds.num_ranks), false);
  for (std::size_t i : idx) {
    const std::size_t g = ds.gender[i] == Gender::Male ? 0 : 1;
    seen[g * static_cast<std::size_t>(ds.num_ranks) + static_cast<std::size_t>(ds.rank[i] - 1)] =
        true;
  }
  for (std::size_t g = 0; g < 2; ++g) {
    int ranks = 0;
    for (int k = 0; k < ds.num_ranks; ++k) {
      ranks += seen[g * static_cast<std::size_t>(ds.num_ranks) + static_cast<std::size_t>(k)];
    }
    if (ranks < 2) return false;
  }
  return true;
}

inline double sample_std(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace detail

/// Validation index sets of a k-fold split stratified by gender x rank:
/// each cell is shuffled and dealt across the folds, continuing where the
/// previous cell stopped so fold sizes stay within one of each other.
inline std::vector<std::vector<std::size_t>> stratified_folds(const Dataset& ds, int folds,
                                                              std::uint64_t seed) {
  if (folds < 2) throw Error(ErrorKind::InfeasibleFolds, "need at least 2 folds");
  if (ds.size() < static_cast<std::size_t>(folds)) {
    throw Error(ErrorKind::InfeasibleFolds, "fewer samples than folds");
  }
  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(folds));
  std::size_t next = 0;
  for (auto& cell : detail::cells(ds)) {
    detail::shuffle(cell, rng);
    for (std::size_t i : cell) {
      out[next].push_back(i);
      next = (next + 1) % out.size();
    }
  }
  for (std::size_t f = 0; f < out.size(); ++f) {
    std::sort(out[f].begin(), out[f].end());
    std::vector<std::size_t> train;
    for (std::size_t g = 0; g < out.size(); ++g) {
      if (g != f) train.insert(train.end(), out[g].begin(), out[g].end());
    }
    if (!detail::trainable(ds, train)) {
      throw Error(ErrorKind::InfeasibleFolds,
                  "fold " + std::to_string(f + 1) +
                      " leaves a gender with fewer than two ranks in training");
    }
  }
  return out;
}

inline std::vector<std::size_t> complement(std::size_t n, std::span<const std::size_t> sorted) {
  std::vector<std::size_t> out;
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (j < sorted.size() && sorted[j] == i) {
      ++j;
      continue;
    }
    out.push_back(i);
  }
  return out;
}

struct HyperGrid {
  std::vector<double> lambda1{1.0};
  std::vector<double> lambda2{1.0};
  std::vector<double> lambda3{10.0, 100.0, 1000.0};
};

struct CvEntry {
  HyperParams hyper;
  std::vector<double> fold_mae;
  double mean_mae = 0.0;
};

struct CvResult {
  HyperParams best;
  std::vector<CvEntry> entries;
};

inline double validation_mae(const GenAgeModel& model, const Dataset& val) {
  std::vector<int> pred(val.size());
  for (std::size_t i = 0; i < val.size(); ++i) pred[i] = predict(model, val.sample(i).features).rank;
  return mae(pred, val.rank);
}

/// Exhaustive grid search on mean validation MAE of the base variant. Ties
/// go to the larger lambda3, then the smaller lambda1, then the smaller
/// lambda2.
inline CvResult cross_validate(const Dataset& ds, const HyperGrid& grid, const HyperParams& base,
                               int folds = 5, std::uint64_t seed = 42) {
  validate_dataset(ds);
  if (grid.lambda1.empty() || grid.lambda2.empty() || grid.lambda3.empty()) {
    throw Error(ErrorKind::BadHyperParams, "empty hyperparameter grid");
  }
  const auto split = stratified_folds(ds, folds, seed);
  std::vector<Dataset> train, val;
  for (const auto& v : split) {
    train.push_back(ds.subset(complement(ds.size(), v)));
    val.push_back(ds.subset(v));
  }

  CvResult out;
  const CvEntry* best = nullptr;
  auto better = [](const CvEntry& a, const CvEntry& b) {
    if (a.mean_mae != b.mean_mae) return a.mean_mae < b.mean_mae;
    if (a.hyper.lambda3 != b.hyper.lambda3) return a.hyper.lambda3 > b.hyper.lambda3;
    if (a.hyper.lambda1 != b.hyper.lambda1) return a.hyper.lambda1 < b.hyper.lambda1;
    return a.hyper.lambda2 < b.hyper.lambda2;
  };
  for (double l1 : grid.lambda1) {
    for (double l2 : grid.lambda2) {
      for (double l3 : grid.lambda3) {
        CvEntry e;
        e.hyper = base;
        e.hyper.lambda1 = l1;
        e.hyper.lambda2 = l2;
        e.hyper.lambda3 = l3;
        e.hyper.validate();
        TrainConfig cfg;
        cfg.hyper = e.hyper;
        cfg.record_trace = false;
        double sum = 0.0;
        for (std::size_t f = 0; f < split.size(); ++f) {
          e.fold_mae.push_back(validation_mae(fit(train[f], cfg), val[f]));
          sum += e.fold_mae.back();
        }
        e.mean_mae = sum / static_cast<double>(split.size());
        out.entries.push_back(std::move(e));
      }
    }
  }
  for (const auto& e : out.entries) {
    if (!best || better(e, *best)) best = &e;
  }
  out.best = best->hyper;
  return out;
}

struct PlsCvResult {
  int best_components = 1;
  std::vector<double> mean_mae;  // index a - 1 for a components
};

/// Component count for PLS by k-fold validation MAE of the decoded rank;
/// ties go to fewer components.
inline PlsCvResult cross_validate_pls(const Dataset& ds, int max_components, int folds = 5,
                                      std::uint64_t seed = 42) {
  const auto split = stratified_folds(ds, folds, seed);
  std::size_t smallest_train = ds.size();
  for (const auto& v : split) smallest_train = std::min(smallest_train, ds.size() - v.size());
  const int cap = static_cast<int>(std::min<std::size_t>(
      {static_cast<std::size_t>(std::max(1, max_components)), static_cast<std::size_t>(ds.dim()),
       smallest_train - 1}));
  PlsCvResult out;
  std::vector<double> sums(static_cast<std::size_t>(cap), 0.0);
  std::vector<int> usable(static_cast<std::size_t>(cap), 0);
  for (const auto& v : split) {
    const Dataset tr = ds.subset(complement(ds.size(), v));
    const Dataset va = ds.subset(v);
    for (int a = 1; a <= cap; ++a) {
      try {
        const PlsModel m = fit_pls(tr, a);
        std::vector<int> pred(va.size());
        for (std::size_t i = 0; i < va.size(); ++i) pred[i] = predict_pls(m, va.sample(i).features).rank;
        sums[static_cast<std::size_t>(a - 1)] += mae(pred, va.rank);
        ++usable[static_cast<std::size_t>(a - 1)];
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::RankDeficient) throw;
      }
    }
  }
  double best = std::numeric_limits<double>::infinity();
  for (int a = 1; a <= cap; ++a) {
    const auto ai = static_cast<std::size_t>(a - 1);
    const double m = usable[ai] == static_cast<int>(split.size())
                         ? sums[ai] / static_cast<double>(split.size())
                         : std::numeric_limits<double>::infinity();
    out.mean_mae.push_back(m);
    if (m < best) {
      best = m;
      out.best_components = a;
    }
  }
  if (!std::isfinite(best)) throw Error(ErrorKind::RankDeficient, "no PLS component count fits every fold");
  return out;
}

/// Train/test split for one run: per rank, `train_per_rank` samples split
/// evenly between the genders (a short gender cell is topped up from the
/// other one); a rank with fewer samples than that goes entirely to training.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> train_test_split(
    const Dataset& ds, int train_per_rank, std::uint64_t seed) {
  if (train_per_rank < 2) throw Error(ErrorKind::BadConfig, "train size per rank must be >= 2");
  std::mt19937_64 rng(seed);
  auto by_cell = detail::cells(ds);
  for (auto& cell : by_cell) detail::shuffle(cell, rng);
  std::vector<std::size_t> train, test;
  const auto K = static_cast<std::size_t>(ds.num_ranks);
  for (std::size_t k = 0; k < K; ++k) {
    const auto& m = by_cell[k];
    const auto& f = by_cell[K + k];
    const std::size_t want = static_cast<std::size_t>(train_per_rank);
    std::size_t take_m = 0, take_f = 0;
    if (m.size() + f.size() <= want) {
      take_m = m.size();
      take_f = f.size();
    } else {
      // Odd sizes give the extra sample to males on odd ranks, females on even.
      take_m = want / 2 + ((want % 2) && (k % 2 == 0) ? 1 : 0);
      take_f = want - take_m;
      if (take_m > m.size()) {
        take_f += take_m - m.size();
        take_m = m.size();
      }
      if (take_f > f.size()) {
        take_m += take_f - f.size();
        take_f = f.size();
      }
    }
    train.insert(train.end(), m.begin(), m.begin() + static_cast<std::ptrdiff_t>(take_m));
    test.insert(test.end(), m.begin() + static_cast<std::ptrdiff_t>(take_m), m.end());
    train.insert(train.end(), f.begin(), f.begin() + static_cast<std::ptrdiff_t>(take_f));
    test.insert(test.end(), f.begin() + static_cast<std::ptrdiff_t>(take_f), f.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {train, test};
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

inline MeanStd mean_std(const std::vector<double>& v) {
  if (v.empty()) return {};
  double s = 0.0;
  for (double x : v) s += x;
  const double m = s / static_cast<double>(v.size());
  return {m, detail::sample_std(v, m)};
}

struct RunRecord {
  int run = 0;
  std::uint64_t seed = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  double mae_mixed = 0.0;
  double mae_male = 0.0;
  double mae_female = 0.0;
  double mae_oracle = 0.0;  // ladder chosen by the true gender
  std::optional<double> mae_years;
  double gender_accuracy = 0.0;
  std::optional<double> angle_deg;
  std::optional<HyperParams> hyper;
  std::optional<int> pls_components;
  std::vector<double> ladder_male, ladder_female;
  std::optional<double> spread_male, spread_female, spread_shared;
};

struct EvalReport {
  Method method = Method::TT;
  int train_per_rank = 0;
  int runs = 0;
  MeanStd mae_mixed, mae_male, mae_female, mae_oracle, gender_accuracy;
  std::optional<MeanStd> mae_years;
  std::optional<MeanStd> angle_deg;
  std::vector<double> ladder_male, ladder_female;  // mean cut positions over runs
  std::optional<MeanStd> ladder_spread_male, ladder_spread_female, ladder_spread_shared;
  std::vector<RunRecord> records;
};

struct ExperimentProtocol {
  std::vector<int> train_per_rank{20};
  int runs = 10;
  std::uint64_t seed = 42;
  std::vector<Method> methods{Method::Direct, Method::TwoStep, Method::ST, Method::TT, Method::Pls};
  HyperParams hyper;                // per-method variant is substituted
  std::optional<HyperGrid> cv_grid;  // when set, picks lambdas on each run's training set
  int cv_folds = 5;
  int pls_max_components = 10;
};

namespace detail {

struct Scored {
  std::vector<int> pred, oracle;
  std::vector<Gender> gender;
};

inline double subset_mae(const Scored& s, const Dataset& test, std::optional<Gender> only) {
  std::vector<int> p, t;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (only && test.gender[i] != *only) continue;
    p.push_back(s.pred[i]);
    t.push_back(test.rank[i]);
  }
  return t.empty() ? 0.0 : mae(p, t);
}

inline double years_mae(const std::vector<int>& pred, const Dataset& test) {
  double total = 0.0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    total += std::abs(test.rank_years[static_cast<std::size_t>(pred[i] - 1)] -
                      test.rank_years[static_cast<std::size_t>(test.rank[i] - 1)]);
  }
  return total / static_cast<double>(test.size());
}

inline void score_run(RunRecord& rec, const Scored& s, const Dataset& test) {
  rec.n_test = test.size();
  rec.mae_mixed = mae(s.pred, test.rank);
  rec.mae_male = subset_mae(s, test, Gender::Male);
  rec.mae_female = subset_mae(s, test, Gender::Female);
  rec.mae_oracle = mae(s.oracle, test.rank);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) correct += s.gender[i] == test.gender[i];
  rec.gender_accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
  if (!test.rank_years.empty()) rec.mae_years = years_mae(s.pred, test);
}

inline RunRecord run_genage(Method method, const Dataset& train, const Dataset& test,
                            const ExperimentProtocol& protocol, std::uint64_t run_seed,
                            const std::optional<double>& shared_spread) {
  RunRecord rec;
  HyperParams h = protocol.hyper;
  h.variant = variant_of(method);
  if (protocol.cv_grid) {
    h = cross_validate(train, *protocol.cv_grid, h, protocol.cv_folds, mix_seed(run_seed, 7)).best;
  }
  TrainConfig cfg;
  cfg.hyper = h;
  cfg.record_trace = false;
  const GenAgeModel model = fit(train, cfg);
  rec.hyper = model.hyper;
  Scored s;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const Vector x = test.sample(i).features;
    const Prediction p = predict(model, x);
    s.pred.push_back(p.rank);
    s.gender.push_back(p.gender);
    s.oracle.push_back(predict_with_gender(model, x, test.gender[i]).rank);
  }
  score_run(rec, s, test);
  if (model.w_g.norm() > 0.0 && model.w_a.norm() > 0.0) {
    double angle = angle_deg(model.w_g, model.w_a);
    if (model.w_a_female && model.w_a_female->norm() > 0.0) {
      angle = 0.5 * (angle + angle_deg(model.w_g, *model.w_a_female));
    }
    rec.angle_deg = angle;
  }
  rec.ladder_male = model.ladder_male.cuts();
  rec.ladder_female = model.ladder_female.cuts();
  rec.spread_male = model.ladder_male.spread();
  rec.spread_female = model.ladder_female.spread();
  if (method == Method::ST || method == Method::Direct) rec.spread_shared = model.ladder_male.spread();
  if (method == Method::TT) rec.spread_shared = shared_spread;
  return rec;
}

inline RunRecord run_pls(const Dataset& train, const Dataset& test,
                         const ExperimentProtocol& protocol, std::uint64_t run_seed) {
  RunRecord rec;
  const int a =
      cross_validate_pls(train, protocol.pls_max_components, protocol.cv_folds, mix_seed(run_seed, 11))
          .best_components;
  rec.pls_components = a;
  const PlsModel model = fit_pls(train, a);
  Scored s;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const PlsPrediction p = predict_pls(model, test.sample(i).features);
    s.pred.push_back(p.rank);
    s.gender.push_back(p.gender);
    s.oracle.push_back(p.rank);
  }
  score_run(rec, s, test);
  return rec;
}

inline EvalReport aggregate(Method method, int train_per_rank, std::vector<RunRecord> records) {
  EvalReport rep;
  rep.method = method;
  rep.train_per_rank = train_per_rank;
  rep.runs = static_cast<int>(records.size());
  auto collect = [&](auto get) {
    std::vector<double> v;
    for (const auto& r : records) v.push_back(get(r));
    return mean_std(v);
  };
  auto collect_opt = [&](auto get) -> std::optional<MeanStd> {
    std::vector<double> v;
    for (const auto& r : records) {
      const std::optional<double> x = get(r);
      if (!x) return std::nullopt;
      v.push_back(*x);
    }
    return v.empty() ? std::nullopt : std::optional<MeanStd>(mean_std(v));
  };
  rep.mae_mixed = collect([](const RunRecord& r) { return r.mae_mixed; });
  rep.mae_male = collect([](const RunRecord& r) { return r.mae_male; });
  rep.mae_female = collect([](const RunRecord& r) { return r.mae_female; });
  rep.mae_oracle = collect([](const RunRecord& r) { return r.mae_oracle; });
  rep.gender_accuracy = collect([](const RunRecord& r) { return r.gender_accuracy; });
  rep.mae_years = collect_opt([](const RunRecord& r) { return r.mae_years; });
  rep.angle_deg = collect_opt([](const RunRecord& r) { return r.angle_deg; });
  rep.ladder_spread_male = collect_opt([](const RunRecord& r) { return r.spread_male; });
  rep.ladder_spread_female = collect_opt([](const RunRecord& r) { return r.spread_female; });
  rep.ladder_spread_shared = collect_opt([](const RunRecord& r) { return r.spread_shared; });
  if (!records.empty() && !records.front().ladder_male.empty()) {
    const std::size_t n = records.front().ladder_male.size();
    rep.ladder_male.assign(n, 0.0);
    rep.ladder_female.assign(n, 0.0);
    for (const auto& r : records) {
      for (std::size_t k = 0; k < n; ++k) {
        rep.ladder_male[k] += r.ladder_male[k] / static_cast<double>(records.size());
        rep.ladder_female[k] += r.ladder_female[k] / static_cast<double>(records.size());
      }
    }
  }
  rep.records = std::move(records);
  return rep;
}

template <class DrawDataset>
std::vector<EvalReport> run_protocol(const ExperimentProtocol& protocol, DrawDataset&& draw) {
  if (protocol.runs < 1) throw Error(ErrorKind::BadConfig, "runs must be >= 1");
  if (protocol.methods.empty()) throw Error(ErrorKind::BadConfig, "no methods requested");
  std::vector<EvalReport> reports;
  for (int size : protocol.train_per_rank) {
    std::map<Method, std::vector<RunRecord>> by_method;
    for (int run = 0; run < protocol.runs; ++run) {
      const std::uint64_t run_seed = mix_seed(protocol.seed, static_cast<std::uint64_t>(run));
      const Dataset& ds = draw(run);
      const auto [tr, te] = train_test_split(ds, size, run_seed);
      if (te.empty()) throw Error(ErrorKind::BadConfig, "train size leaves no test samples");
      const Dataset train = ds.subset(tr);
      const Dataset test = ds.subset(te);

      // TT reports sit next to the shared-ladder spread of an ST fit on the
      // same split.
      std::optional<double> shared;
      const bool wants_tt = std::find(protocol.methods.begin(), protocol.methods.end(),
                                      Method::TT) != protocol.methods.end();
      std::optional<RunRecord> st_record;
      if (wants_tt) {
        st_record = run_genage(Method::ST, train, test, protocol, run_seed, std::nullopt);
        shared = st_record->spread_shared;
      }
      for (Method m : protocol.methods) {
        RunRecord rec;
        if (m == Method::Pls) {
          rec = run_pls(train, test, protocol, run_seed);
        } else if (m == Method::ST && st_record) {
          rec = *st_record;
        } else {
          rec = run_genage(m, train, test, protocol, run_seed, shared);
        }
        rec.run = run;
        rec.seed = run_seed;
        rec.n_train = train.size();
        by_method[m].push_back(std::move(rec));
      }
    }
    for (Method m : protocol.methods) reports.push_back(aggregate(m, size, by_method[m]));
  }
  return reports;
}

}  // namespace detail

/// Repeated random train/test splits of one dataset.
inline std::vector<EvalReport> run_experiment(const Dataset& ds,
                                              const ExperimentProtocol& protocol) {
  validate_dataset(ds);
  return detail::run_protocol(protocol, [&](int) -> const Dataset& { return ds; });
}

/// One fresh synthetic draw per run (seed = cfg.seed + run), each split the
/// same way.
inline std::vector<EvalReport> run_experiment(const SynthConfig& cfg,
                                              const ExperimentProtocol& protocol) {
  Dataset current;
  return detail::run_protocol(protocol, [&](int run) -> const Dataset& {
    SynthConfig c = cfg;
    c.seed = cfg.seed + static_cast<std::uint64_t>(run);
    current = generate(c);
    return current;
  });
}

}  // namespace genage
