#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <unistd.h>

#include "json.hpp"

#include "genage/core.hpp"
#include "genage/evaluation.hpp"
#include "genage/pls.hpp"
#include "genage/synth.hpp"

namespace genage {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

// ---------------------------------------------------------------------------
// Files

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorKind::Io, "read failed on '" + path.string() + "'");
  return ss.str();
}

/// Writes through a sibling temp file and renames it into place, so a failed
/// run never leaves a partial file at `path`.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.empty()) throw Error(ErrorKind::Io, "empty output path");
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error(ErrorKind::Io, "write failed on '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignore;
    std::filesystem::remove(tmp, ignore);
    throw Error(ErrorKind::Io, "cannot move output into '" + path.string() + "': " + ec.message());
  }
}

// ---------------------------------------------------------------------------
// Dataset CSV

namespace detail {

// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

[[noreturn]] inline void parse_fail(std::size_t line, const std::string& msg) {
  throw Error(ErrorKind::Parse, "line " + std::to_string(line) + ": " + msg, line);
}

// Leading U+2212 (typographic minus) is read as '-'.
inline std::string ascii_sign(std::string_view s) {
  constexpr std::string_view minus = "\xE2\x88\x92";
  if (s.substr(0, minus.size()) == minus) return "-" + std::string(s.substr(minus.size()));
  return std::string(s);
}

inline double parse_double(std::string_view raw, std::size_t line, std::string_view column) {
  const std::string text = ascii_sign(raw);
  std::string_view s = text;
  // from_chars rejects a leading '+', which spreadsheets like to emit.
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    parse_fail(line, "column '" + std::string(column) + "': cannot parse '" + std::string(s) +
                         "' as a number");
  }
  return v;
}

inline Gender parse_gender(std::string_view raw, std::size_t line) {
  const std::string s = ascii_sign(raw);
  if (s == "M" || s == "m" || s == "+1" || s == "1") return Gender::Male;
  if (s == "F" || s == "f" || s == "-1") return Gender::Female;
  parse_fail(line, "gender must be one of M, F, +1, -1; got '" + std::string(s) + "'");
}

}  // namespace detail

enum class AgeColumn { Auto, Rank, Year };

// Largest age that AgeColumn::Auto still reads as a rank when the observed
// ages have gaps.
inline constexpr long kMaxAutoRank = 12;

/// Parses the dataset CSV format: a header naming f1..fd, `gender` and
/// `age` (in any column order), then one sample per line. Blank lines are
/// skipped. With AgeColumn::Auto, ages are ranks when they cover 1..max
/// without gaps or all lie in 1..kMaxAutoRank; anything else is treated as
/// raw years and compacted to ranks.
inline Dataset parse_csv(std::string_view text, AgeColumn mode = AgeColumn::Auto) {
  std::vector<std::pair<std::size_t, std::string_view>> lines;
  std::size_t start = 0, number = 0;
  while (start <= text.size()) {
    const std::size_t nl = text.find('\n', start);
    const std::string_view line =
        text.substr(start, nl == std::string_view::npos ? text.npos : nl - start);
    ++number;
    if (!detail::trim(line).empty()) lines.emplace_back(number, line);
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  if (lines.empty()) throw Error(ErrorKind::Parse, "empty CSV: no header", std::size_t{1});

  const auto header = detail::split_commas(lines[0].second);
  const std::size_t header_line = lines[0].first;
  std::vector<long> feature_col;
  long gender_col = -1, age_col = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string_view h = header[c];
    if (h == "gender") {
      if (gender_col >= 0) detail::parse_fail(header_line, "duplicate 'gender' column");
      gender_col = static_cast<long>(c);
    } else if (h == "age") {
      if (age_col >= 0) detail::parse_fail(header_line, "duplicate 'age' column");
      age_col = static_cast<long>(c);
    } else if (h.size() >= 2 && h[0] == 'f') {
      int j = 0;
      const auto res = std::from_chars(h.data() + 1, h.data() + h.size(), j);
      if (res.ec != std::errc() || res.ptr != h.data() + h.size() || j < 1) {
        detail::parse_fail(header_line, "unknown column '" + std::string(h) + "'");
      }
      if (static_cast<std::size_t>(j) > feature_col.size()) feature_col.resize(static_cast<std::size_t>(j), -1);
      if (feature_col[static_cast<std::size_t>(j - 1)] >= 0) {
        detail::parse_fail(header_line, "duplicate column '" + std::string(h) + "'");
      }
      feature_col[static_cast<std::size_t>(j - 1)] = static_cast<long>(c);
    } else {
      detail::parse_fail(header_line, "unknown column '" + std::string(h) + "'");
    }
  }
  if (gender_col < 0) detail::parse_fail(header_line, "missing 'gender' column");
  if (age_col < 0) detail::parse_fail(header_line, "missing 'age' column");
  if (feature_col.empty()) detail::parse_fail(header_line, "no feature columns f1..fd");
  for (std::size_t j = 0; j < feature_col.size(); ++j) {
    if (feature_col[j] < 0) {
      detail::parse_fail(header_line, "feature column 'f" + std::to_string(j + 1) + "' is missing");
    }
  }

  const std::size_t n = lines.size() - 1;
  const auto d = static_cast<Eigen::Index>(feature_col.size());
  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(n), d);
  std::vector<long> ages;
  std::vector<std::size_t> line_of;
  for (std::size_t r = 0; r < n; ++r) {
    const auto [ln, text_line] = lines[r + 1];
    const auto cells = detail::split_commas(text_line);
    if (cells.size() != header.size()) {
      detail::parse_fail(ln, "expected " + std::to_string(header.size()) + " fields, found " +
                                 std::to_string(cells.size()));
    }
    for (Eigen::Index j = 0; j < d; ++j) {
      const double v = detail::parse_double(cells[static_cast<std::size_t>(feature_col[static_cast<std::size_t>(j)])],
                                            ln, header[static_cast<std::size_t>(feature_col[static_cast<std::size_t>(j)])]);
      if (!std::isfinite(v)) {
        throw Error(ErrorKind::NonFiniteFeature,
                    "line " + std::to_string(ln) + ": feature f" + std::to_string(j + 1) +
                        " is not finite",
                    ln);
      }
      ds.features(static_cast<Eigen::Index>(r), j) = v;
    }
    ds.gender.push_back(detail::parse_gender(cells[static_cast<std::size_t>(gender_col)], ln));
    const std::string_view a = cells[static_cast<std::size_t>(age_col)];
    long age = 0;
    const char* b = a.data() + (!a.empty() && a.front() == '+' ? 1 : 0);
    const auto res = std::from_chars(b, a.data() + a.size(), age);
    if (a.empty() || res.ec != std::errc() || res.ptr != a.data() + a.size()) {
      detail::parse_fail(ln, "age must be an integer; got '" + std::string(a) + "'");
    }
    ages.push_back(age);
    line_of.push_back(ln);
  }

  const std::set<long> distinct(ages.begin(), ages.end());
  const bool contiguous = !distinct.empty() && *distinct.begin() == 1 &&
                          *distinct.rbegin() == static_cast<long>(distinct.size());
  const bool short_scale = !distinct.empty() && *distinct.begin() >= 1 &&
                           *distinct.rbegin() <= kMaxAutoRank;
  const bool as_rank =
      mode == AgeColumn::Rank || (mode == AgeColumn::Auto && (contiguous || short_scale));
  if (as_rank) {
    long top = 0;
    for (std::size_t r = 0; r < n; ++r) {
      if (ages[r] < 1) {
        throw Error(ErrorKind::RankOutOfRange,
                    "line " + std::to_string(line_of[r]) + ": rank " + std::to_string(ages[r]) +
                        " is below 1",
                    line_of[r]);
      }
      top = std::max(top, ages[r]);
      ds.rank.push_back(static_cast<int>(ages[r]));
    }
    ds.num_ranks = static_cast<int>(top);
  } else {
    const std::vector<long> years(distinct.begin(), distinct.end());
    for (long y : years) ds.rank_years.push_back(static_cast<int>(y));
    for (long a : ages) {
      ds.rank.push_back(
          static_cast<int>(std::lower_bound(years.begin(), years.end(), a) - years.begin()) + 1);
    }
    ds.num_ranks = static_cast<int>(years.size());
  }
  try {
    validate_dataset(ds);
  } catch (const Error& e) {
    if (e.index() && *e.index() < line_of.size()) {
      const std::size_t ln = line_of[*e.index()];
      throw Error(e.kind(), "line " + std::to_string(ln) + ": " + e.message(), ln);
    }
    throw;
  }
  return ds;
}

inline Dataset ingest_csv(const std::filesystem::path& path, AgeColumn mode = AgeColumn::Auto) {
  return parse_csv(read_file(path), mode);
}

/// Inverse of parse_csv. Ages are written as years when the dataset carries
/// a rank-to-year map.
inline std::string to_csv(const Dataset& ds) {
  validate_dataset(ds);
  std::string out;
  for (Eigen::Index j = 0; j < ds.dim(); ++j) out += "f" + std::to_string(j + 1) + ",";
  out += "gender,age\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (Eigen::Index j = 0; j < ds.dim(); ++j) {
      out += detail::format_double(ds.features(static_cast<Eigen::Index>(i), j));
      out += ',';
    }
    out += ds.gender[i] == Gender::Male ? "M," : "F,";
    out += std::to_string(ds.rank_years.empty()
                              ? ds.rank[i]
                              : ds.rank_years[static_cast<std::size_t>(ds.rank[i] - 1)]);
    out += '\n';
  }
  return out;
}

inline void export_csv(const Dataset& ds, const std::filesystem::path& path) {
  write_file_atomic(path, to_csv(ds));
}

// ---------------------------------------------------------------------------
// JSON helpers

namespace detail {

inline Json to_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

[[noreturn]] inline void schema_fail(const std::string& msg) {
  throw Error(ErrorKind::Parse, "model file: " + msg);
}

inline const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) schema_fail(std::string("missing field '") + key + "'");
  return j.at(key);
}

inline double number(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_number()) schema_fail(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

inline Vector vector_of(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_array()) schema_fail(std::string("field '") + key + "' must be an array");
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) schema_fail(std::string("field '") + key + "' must hold numbers");
    out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
  }
  return out;
}

inline std::vector<double> doubles_of(const Json& j, const char* key) {
  const Vector v = vector_of(j, key);
  return std::vector<double>(v.data(), v.data() + v.size());
}

inline Json hyper_json(const HyperParams& h) {
  return Json{{"lambda1", h.lambda1}, {"lambda2", h.lambda2}, {"lambda3", h.lambda3},
              {"t_max", h.t_max},     {"tol", h.tol},         {"variant", to_string(h.variant)}};
}

inline HyperParams hyper_from(const Json& j) {
  HyperParams h;
  h.lambda1 = number(j, "lambda1");
  h.lambda2 = number(j, "lambda2");
  h.lambda3 = number(j, "lambda3");
  h.t_max = static_cast<int>(number(j, "t_max"));
  h.tol = number(j, "tol");
  h.variant = parse_variant(field(j, "variant").get<std::string>());
  return h;
}

inline void check_schema(const Json& j, std::string_view kind) {
  if (!j.is_object()) schema_fail("top level must be an object");
  const Json& v = field(j, "schema_version");
  if (!v.is_number_integer() || v.get<int>() != kSchemaVersion) {
    schema_fail("unsupported schema_version " + v.dump());
  }
  const Json& k = field(j, "kind");
  if (!k.is_string() || k.get<std::string>() != kind) {
    schema_fail("expected kind '" + std::string(kind) + "', found " + k.dump());
  }
}

inline Json parse_json(std::string_view text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::Parse, what + ": " + e.what());
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Models

inline Json model_to_json(const GenAgeModel& m, const std::vector<int>& rank_years = {}) {
  Json j{{"schema_version", kSchemaVersion},
         {"kind", "genage"},
         {"variant", to_string(m.variant)},
         {"num_ranks", m.num_ranks},
         {"w_g", detail::to_json(m.w_g)},
         {"b_g", m.b_g},
         {"w_a", detail::to_json(m.w_a)},
         {"ladder_male", m.ladder_male.cuts()},
         {"ladder_female", m.ladder_female.cuts()},
         {"hyper", detail::hyper_json(m.hyper)},
         {"objective_trace", m.objective_trace}};
  if (m.w_a_female) j["w_a_female"] = detail::to_json(*m.w_a_female);
  if (!rank_years.empty()) j["rank_years"] = rank_years;
  return j;
}

inline GenAgeModel model_from_json(const Json& j) {
  detail::check_schema(j, "genage");
  GenAgeModel m;
  try {
    m.variant = parse_variant(detail::field(j, "variant").get<std::string>());
    m.num_ranks = static_cast<int>(detail::number(j, "num_ranks"));
    m.w_g = detail::vector_of(j, "w_g");
    m.b_g = detail::number(j, "b_g");
    m.w_a = detail::vector_of(j, "w_a");
    if (j.contains("w_a_female")) m.w_a_female = detail::vector_of(j, "w_a_female");
    m.ladder_male = ThresholdLadder(detail::doubles_of(j, "ladder_male"));
    m.ladder_female = ThresholdLadder(detail::doubles_of(j, "ladder_female"));
    m.hyper = detail::hyper_from(detail::field(j, "hyper"));
    m.objective_trace = detail::doubles_of(j, "objective_trace");
  } catch (const Json::exception& e) {
    detail::schema_fail(e.what());
  }
  const Eigen::Index d = m.w_g.size();
  if (m.w_a.size() != d || (m.w_a_female && m.w_a_female->size() != d)) {
    detail::schema_fail("direction vectors differ in length");
  }
  if (m.ladder_male.num_ranks() != m.num_ranks || m.ladder_female.num_ranks() != m.num_ranks) {
    detail::schema_fail("ladder length does not match num_ranks");
  }
  return m;
}

inline Json pls_to_json(const PlsModel& m, const std::vector<int>& rank_years = {}) {
  Json w = Json::array(), p = Json::array(), q = Json::array(), b = Json::array();
  for (const auto& v : m.x_weights) w.push_back(detail::to_json(v));
  for (const auto& v : m.x_loadings) p.push_back(detail::to_json(v));
  for (const auto& v : m.y_loadings) q.push_back(detail::to_json(v));
  for (Eigen::Index r = 0; r < m.coefficients.rows(); ++r) {
    b.push_back(detail::to_json(m.coefficients.row(r).transpose()));
  }
  Json j{{"schema_version", kSchemaVersion},
         {"kind", "pls"},
         {"n_components", m.n_components},
         {"num_ranks", m.num_ranks},
         {"x_weights", w},
         {"x_loadings", p},
         {"y_loadings", q},
         {"coefficients", b},
         {"x_mean", detail::to_json(m.x_mean)},
         {"y_mean", detail::to_json(m.y_mean)}};
  if (!rank_years.empty()) j["rank_years"] = rank_years;
  return j;
}

inline PlsModel pls_from_json(const Json& j) {
  detail::check_schema(j, "pls");
  PlsModel m;
  try {
    m.n_components = static_cast<int>(detail::number(j, "n_components"));
    m.num_ranks = static_cast<int>(detail::number(j, "num_ranks"));
    m.x_mean = detail::vector_of(j, "x_mean");
    m.y_mean = detail::vector_of(j, "y_mean");
    auto list = [&](const char* key, std::vector<Vector>& out) {
      const Json& a = detail::field(j, key);
      if (!a.is_array()) detail::schema_fail(std::string(key) + " must be an array");
      for (const Json& v : a) out.push_back(detail::vector_of(Json{{"v", v}}, "v"));
    };
    list("x_weights", m.x_weights);
    list("x_loadings", m.x_loadings);
    list("y_loadings", m.y_loadings);
    std::vector<Vector> rows;
    list("coefficients", rows);
    m.coefficients.resize(static_cast<Eigen::Index>(rows.size()), 2);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != 2) detail::schema_fail("coefficient rows must have 2 entries");
      m.coefficients.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
    }
  } catch (const Json::exception& e) {
    detail::schema_fail(e.what());
  }
  if (m.coefficients.rows() != m.x_mean.size() || m.y_mean.size() != 2) {
    detail::schema_fail("coefficient and mean sizes disagree");
  }
  return m;
}

inline std::vector<int> rank_years_from(const Json& j) {
  std::vector<int> out;
  if (j.contains("rank_years")) out = j.at("rank_years").get<std::vector<int>>();
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic generator config

/// Every key is optional; unknown keys are rejected.
inline SynthConfig synth_config_from_json(const Json& j) {
  if (!j.is_object()) throw Error(ErrorKind::BadConfig, "synth config must be a JSON object");
  static const std::set<std::string> known{
      "dim",          "num_ranks",        "samples_per_cell",   "gender_direction",
      "aging_direction", "gender_gap",    "male_cut_centers",   "female_cut_centers",
      "discrepancy",  "noise_sigma",      "outer_margin",       "mirror_genders",
      "seed"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw Error(ErrorKind::BadConfig, "unknown synth config key '" + key + "'");
  }
  SynthConfig c;
  try {
    if (j.contains("dim")) c.dim = j.at("dim").get<int>();
    if (j.contains("num_ranks")) c.num_ranks = j.at("num_ranks").get<int>();
    if (j.contains("samples_per_cell")) c.samples_per_cell = j.at("samples_per_cell").get<int>();
    auto vec = [&](const char* key, Vector& out) {
      if (!j.contains(key)) return;
      const auto v = j.at(key).get<std::vector<double>>();
      out = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
    };
    vec("gender_direction", c.gender_direction);
    vec("aging_direction", c.aging_direction);
    if (j.contains("gender_gap")) c.gender_gap = j.at("gender_gap").get<double>();
    if (j.contains("male_cut_centers")) c.male_cut_centers = j.at("male_cut_centers").get<std::vector<double>>();
    if (j.contains("female_cut_centers")) c.female_cut_centers = j.at("female_cut_centers").get<std::vector<double>>();
    if (j.contains("discrepancy")) c.discrepancy = j.at("discrepancy").get<double>();
    if (j.contains("noise_sigma")) c.noise_sigma = j.at("noise_sigma").get<double>();
    if (j.contains("outer_margin")) c.outer_margin = j.at("outer_margin").get<double>();
    if (j.contains("mirror_genders")) c.mirror_genders = j.at("mirror_genders").get<bool>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::BadConfig, std::string("synth config: ") + e.what());
  }
  resolve(c);
  return c;
}

inline Json synth_config_to_json(const SynthConfig& cfg) {
  const SynthConfig c = resolve(cfg);
  return Json{{"dim", c.dim},
              {"num_ranks", c.num_ranks},
              {"samples_per_cell", c.samples_per_cell},
              {"gender_direction", detail::to_json(c.gender_direction)},
              {"aging_direction", detail::to_json(c.aging_direction)},
              {"gender_gap", c.gender_gap},
              {"male_cut_centers", c.male_cut_centers},
              {"female_cut_centers", c.female_cut_centers},
              {"discrepancy", c.discrepancy},
              {"noise_sigma", c.noise_sigma},
              {"outer_margin", c.outer_margin},
              {"mirror_genders", c.mirror_genders},
              {"seed", c.seed}};
}

// ---------------------------------------------------------------------------
// Reports

namespace detail {

inline Json mean_std_json(const MeanStd& m) { return Json{{"mean", m.mean}, {"std", m.std}}; }

inline Json opt_json(const std::optional<MeanStd>& m) {
  return m ? mean_std_json(*m) : Json(nullptr);
}

inline Json opt_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

inline Json run_json(const RunRecord& r) {
  Json j{{"run", r.run},
         {"seed", r.seed},
         {"n_train", r.n_train},
         {"n_test", r.n_test},
         {"mae_mixed", r.mae_mixed},
         {"mae_male", r.mae_male},
         {"mae_female", r.mae_female},
         {"mae_oracle_routing", r.mae_oracle},
         {"mae_years", opt_json(r.mae_years)},
         {"gender_accuracy", r.gender_accuracy},
         {"angle_deg", opt_json(r.angle_deg)},
         {"ladder_male", r.ladder_male},
         {"ladder_female", r.ladder_female},
         {"ladder_spread_male", opt_json(r.spread_male)},
         {"ladder_spread_female", opt_json(r.spread_female)},
         {"ladder_spread_shared", opt_json(r.spread_shared)}};
  j["hyper"] = r.hyper ? hyper_json(*r.hyper) : Json(nullptr);
  j["pls_components"] = r.pls_components ? Json(*r.pls_components) : Json(nullptr);
  return j;
}

}  // namespace detail

inline Json report_to_json(const std::vector<EvalReport>& reports, const Json& context = Json::object(),
                           const std::vector<int>& rank_years = {}) {
  Json results = Json::array();
  for (const EvalReport& r : reports) {
    Json runs = Json::array();
    for (const RunRecord& rec : r.records) runs.push_back(detail::run_json(rec));
    results.push_back(Json{{"method", to_string(r.method)},
                           {"train_per_rank", r.train_per_rank},
                           {"runs", r.runs},
                           {"mae_mixed", detail::mean_std_json(r.mae_mixed)},
                           {"mae_male", detail::mean_std_json(r.mae_male)},
                           {"mae_female", detail::mean_std_json(r.mae_female)},
                           {"mae_oracle_routing", detail::mean_std_json(r.mae_oracle)},
                           {"mae_years", detail::opt_json(r.mae_years)},
                           {"gender_accuracy", detail::mean_std_json(r.gender_accuracy)},
                           {"angle_deg", detail::opt_json(r.angle_deg)},
                           {"ladder_male", r.ladder_male},
                           {"ladder_female", r.ladder_female},
                           {"ladder_spread_male", detail::opt_json(r.ladder_spread_male)},
                           {"ladder_spread_female", detail::opt_json(r.ladder_spread_female)},
                           {"ladder_spread_shared", detail::opt_json(r.ladder_spread_shared)},
                           {"per_run", runs}});
  }
  Json j{{"schema_version", kSchemaVersion}, {"kind", "report"}, {"results", results},
         {"context", context}};
  j["rank_years"] = rank_years.empty() ? Json(nullptr) : Json(rank_years);
  return j;
}

/// Keys are sorted (nlohmann's default object ordering) and numbers use the
/// shortest round-trip form, so identical reports give identical bytes.
inline std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

inline std::string report_to_csv(const std::vector<EvalReport>& reports) {
  using detail::format_double;
  auto opt = [](const std::optional<MeanStd>& m, bool want_std) {
    return m ? format_double(want_std ? m->std : m->mean) : std::string();
  };
  std::string out =
      "method,train_per_rank,runs,mae_mixed_mean,mae_mixed_std,mae_male_mean,mae_male_std,"
      "mae_female_mean,mae_female_std,mae_oracle_routing_mean,mae_oracle_routing_std,"
      "mae_years_mean,mae_years_std,gender_accuracy_mean,gender_accuracy_std,angle_deg_mean,"
      "angle_deg_std,ladder_spread_male_mean,ladder_spread_female_mean,"
      "ladder_spread_shared_mean\n";
  for (const EvalReport& r : reports) {
    out += std::string(to_string(r.method)) + "," + std::to_string(r.train_per_rank) + "," +
           std::to_string(r.runs);
    for (const MeanStd* m : {&r.mae_mixed, &r.mae_male, &r.mae_female, &r.mae_oracle}) {
      out += "," + format_double(m->mean) + "," + format_double(m->std);
    }
    out += "," + opt(r.mae_years, false) + "," + opt(r.mae_years, true);
    out += "," + format_double(r.gender_accuracy.mean) + "," + format_double(r.gender_accuracy.std);
    out += "," + opt(r.angle_deg, false) + "," + opt(r.angle_deg, true);
    out += "," + opt(r.ladder_spread_male, false) + "," + opt(r.ladder_spread_female, false) +
           "," + opt(r.ladder_spread_shared, false) + "\n";
  }
  return out;
}

/// Mean fitted cut points, one row per (method, size, gender, cut).
inline std::string thresholds_to_csv(const std::vector<EvalReport>& reports) {
  std::string out = "method,train_per_rank,gender,cut,value\n";
  for (const EvalReport& r : reports) {
    for (const auto& [label, cuts] : {std::pair{"M", &r.ladder_male}, std::pair{"F", &r.ladder_female}}) {
      for (std::size_t k = 0; k < cuts->size(); ++k) {
        out += std::string(to_string(r.method)) + "," + std::to_string(r.train_per_rank) + "," +
               label + "," + std::to_string(k + 1) + "," + detail::format_double((*cuts)[k]) + "\n";
      }
    }
  }
  return out;
}

}  // namespace genage
