#include "spm/io.hpp"

#include <zlib.h>

#include <boost/archive/iterators/base64_from_binary.hpp>
#include <boost/archive/iterators/binary_from_base64.hpp>
#include <boost/archive/iterators/transform_width.hpp>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "spm/errors.hpp"

namespace spm::io {

namespace {

const char* const kColumns[] = {"id", "sex", "age_std", "bmi_std", "bp_i_std",
                                "bp_f_std", "m", "age_years", "oracle_bp_f_std"};

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

[[noreturn]] void field_error(std::size_t line, const std::string& column, const std::string& what) {
  throw DataError("line " + std::to_string(line) + ", column " + column + ": " + what);
}

double parse_real(const std::string& s, std::size_t line, const std::string& column) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v))
    field_error(line, column, "cannot parse '" + s + "' as a real number");
  return v;
}

std::int64_t parse_int(const std::string& s, std::size_t line, const std::string& column) {
  std::int64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
    field_error(line, column, "cannot parse '" + s + "' as an integer");
  return v;
}

// Reads j[key] into out when present.
template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

double real_or_nan(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

json optional_real(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_optional(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

void check_schema(const json& j, const char* kind) {
  if (!j.is_object()) throw DataError(std::string(kind) + ": expected a JSON object");
  if (!j.contains("schema_version")) throw DataError(std::string(kind) + ": missing schema_version");
  const int v = j.at("schema_version").get<int>();
  if (v != kSchemaVersion)
    throw DataError(std::string(kind) + ": unsupported schema_version " + std::to_string(v));
  if (j.contains("kind") && j.at("kind").get<std::string>() != kind)
    throw DataError(std::string("expected a ") + kind + " document, found '" + j.at("kind").get<std::string>() + "'");
}

json header(const char* kind) { return json{{"schema_version", kSchemaVersion}, {"kind", kind}}; }

// Converts schema-level failures into DataError.
template <class Fn>
auto schema_guard(const char* what, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw DataError(std::string(what) + ": " + e.what());
  } catch (const ParameterError& e) {
    throw DataError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

// ---- cohort CSV -----------------------------------------------------------

void write_cohort_csv(std::ostream& out, const Cohort& cohort, bool with_oracle) {
  const bool oracle = with_oracle && cohort.has_oracle();
  const std::size_t ncol = oracle ? 9 : 8;
  for (std::size_t c = 0; c < ncol; ++c) out << (c ? "," : "") << kColumns[c];
  out << '\n';
  for (const auto& p : cohort.participants) {
    out << p.id << ',' << p.sex << ',' << format_real(p.age_std) << ',' << format_real(p.bmi_std) << ','
        << format_real(p.bp_i_std) << ',' << (p.bp_f_std ? format_real(*p.bp_f_std) : "") << ',' << p.m << ','
        << format_real(p.age_years);
    if (oracle) out << ',' << (p.oracle_bp_f_std ? format_real(*p.oracle_bp_f_std) : "");
    out << '\n';
  }
}

Cohort read_cohort_csv(std::istream& in, const std::optional<Standardization>& standardization) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("cohort CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto head = split_csv(line);
  std::map<std::string, std::size_t> index;
  for (std::size_t c = 0; c < head.size(); ++c) {
    const bool known = std::any_of(std::begin(kColumns), std::end(kColumns), [&](const char* k) { return head[c] == k; });
    if (!known) throw DataError("line 1: unknown column '" + head[c] + "'");
    if (!index.emplace(head[c], c).second) throw DataError("line 1: duplicate column '" + head[c] + "'");
  }
  for (std::size_t c = 0; c < 8; ++c)
    if (!index.count(kColumns[c])) throw DataError(std::string("line 1: missing column '") + kColumns[c] + "'");
  const bool has_oracle = index.count("oracle_bp_f_std") > 0;

  Cohort cohort;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != head.size())
      throw DataError("line " + std::to_string(lineno) + ": expected " + std::to_string(head.size()) + " fields, found " +
                      std::to_string(f.size()));
    auto field = [&](const char* name) -> const std::string& { return f[index.at(name)]; };
    Participant p;
    p.id = parse_int(field("id"), lineno, "id");
    p.sex = static_cast<int>(parse_int(field("sex"), lineno, "sex"));
    p.age_std = parse_real(field("age_std"), lineno, "age_std");
    p.bmi_std = parse_real(field("bmi_std"), lineno, "bmi_std");
    p.bp_i_std = parse_real(field("bp_i_std"), lineno, "bp_i_std");
    if (!field("bp_f_std").empty()) p.bp_f_std = parse_real(field("bp_f_std"), lineno, "bp_f_std");
    p.m = static_cast<int>(parse_int(field("m"), lineno, "m"));
    p.age_years = parse_real(field("age_years"), lineno, "age_years");
    if (has_oracle && !field("oracle_bp_f_std").empty())
      p.oracle_bp_f_std = parse_real(field("oracle_bp_f_std"), lineno, "oracle_bp_f_std");
    if (p.m != 0 && p.m != 1) field_error(lineno, "m", "must be 0 or 1");
    if (p.sex != 0 && p.sex != 1) field_error(lineno, "sex", "must be 0 or 1");
    if (p.m == 1 && p.bp_f_std) field_error(lineno, "bp_f_std", "must be empty when m = 1");
    if (p.m == 0 && !p.bp_f_std) field_error(lineno, "bp_f_std", "is required when m = 0");
    cohort.participants.push_back(std::move(p));
  }
  if (cohort.empty()) throw DataError("cohort CSV has no rows");

  if (standardization) {
    cohort.standardization = *standardization;
  } else {
    const auto [lo, hi] = std::minmax_element(cohort.participants.begin(), cohort.participants.end(),
                                              [](const auto& a, const auto& b) { return a.age_std < b.age_std; });
    if (!(hi->age_std - lo->age_std > 1e-12))
      throw DataError("cannot recover the age standardization: all standardized ages are equal");
    const double sd = (hi->age_years - lo->age_years) / (hi->age_std - lo->age_std);
    if (!(sd > 0.0)) throw DataError("age_years and age_std are not increasingly related");
    cohort.standardization.age = {lo->age_years - sd * lo->age_std, sd};
  }
  cohort.validate();
  return cohort;
}

void save_cohort(const std::filesystem::path& path, const Cohort& cohort, bool with_oracle) {
  std::ostringstream os;
  write_cohort_csv(os, cohort, with_oracle);
  write_text(path, os.str());
}

Cohort load_cohort(const std::filesystem::path& path, const std::optional<Standardization>& standardization) {
  std::istringstream is(read_text(path));
  try {
    return read_cohort_csv(is, standardization);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

// ---- binary blobs ---------------------------------------------------------

std::string base64_encode(const std::string& bytes) {
  using namespace boost::archive::iterators;
  using It = base64_from_binary<transform_width<std::string::const_iterator, 6, 8>>;
  std::string out(It(bytes.begin()), It(bytes.end()));
  out.append((3 - bytes.size() % 3) % 3, '=');
  return out;
}

std::string base64_decode(const std::string& text) {
  using namespace boost::archive::iterators;
  using It = transform_width<binary_from_base64<std::string::const_iterator>, 8, 6>;
  if (text.size() % 4 != 0) throw DataError("base64 text length is not a multiple of 4");
  std::size_t pad = 0;
  while (pad < 2 && pad < text.size() && text[text.size() - 1 - pad] == '=') ++pad;
  std::string body = text;
  for (std::size_t i = 0; i < pad; ++i) body[body.size() - 1 - i] = 'A';
  try {
    std::string out(It(body.begin()), It(body.end()));
    out.resize(out.size() - pad);
    return out;
  } catch (const std::exception&) {
    throw DataError("invalid base64 text");
  }
}

std::string zlib_compress(const std::string& bytes) {
  uLongf size = compressBound(static_cast<uLong>(bytes.size()));
  std::string out(size, '\0');
  if (compress2(reinterpret_cast<Bytef*>(out.data()), &size, reinterpret_cast<const Bytef*>(bytes.data()),
                static_cast<uLong>(bytes.size()), 6) != Z_OK)
    throw DataError("zlib compression failed");
  out.resize(size);
  return out;
}

std::string zlib_decompress(const std::string& bytes, std::size_t size) {
  std::string out(size, '\0');
  uLongf got = static_cast<uLongf>(size);
  if (uncompress(reinterpret_cast<Bytef*>(out.data()), &got, reinterpret_cast<const Bytef*>(bytes.data()),
                 static_cast<uLong>(bytes.size())) != Z_OK ||
      got != size)
    throw DataError("zlib stream is corrupt or has the wrong length");
  return out;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  std::string raw(static_cast<std::size_t>(m.size()) * sizeof(double), '\0');
  if (m.size() > 0) std::memcpy(raw.data(), m.data(), raw.size());
  return json{{"rows", m.rows()},
              {"cols", m.cols()},
              {"dtype", "float64-le"},
              {"order", "column-major"},
              {"encoding", "zlib+base64"},
              {"data", base64_encode(zlib_compress(raw))}};
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  return schema_guard("matrix", [&] {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    if (rows < 0 || cols < 0) throw DataError("matrix: negative shape");
    if (j.at("dtype").get<std::string>() != "float64-le" || j.at("encoding").get<std::string>() != "zlib+base64")
      throw DataError("matrix: unsupported dtype or encoding");
    const std::size_t bytes = static_cast<std::size_t>(rows * cols) * sizeof(double);
    const std::string raw = zlib_decompress(base64_decode(j.at("data").get<std::string>()), bytes);
    Eigen::MatrixXd m(rows, cols);
    if (bytes > 0) std::memcpy(m.data(), raw.data(), bytes);
    return m;
  });
}

// ---- JSON conversions -------------------------------------------------------

json to_json(const Standardization& s) {
  auto scale = [](const VariableScale& v) { return json{{"mean", v.mean}, {"sd", v.sd}}; };
  json j = header("standardization");
  j["bp_f"] = scale(s.bp_f);
  j["bp_i"] = scale(s.bp_i);
  j["age"] = scale(s.age);
  j["bmi"] = scale(s.bmi);
  return j;
}

Standardization standardization_from_json(const json& j) {
  return schema_guard("standardization", [&] {
    check_schema(j, "standardization");
    auto scale = [&](const char* key) {
      const auto& v = j.at(key);
      return VariableScale{v.at("mean").get<double>(), v.at("sd").get<double>()};
    };
    Standardization s{scale("bp_f"), scale("bp_i"), scale("age"), scale("bmi")};
    s.validate();
    return s;
  });
}

json to_json(const ParameterSet& t) {
  json j = header("parameters");
  j["alpha_0"] = t.alpha_0;
  j["alpha_bp"] = t.alpha_bp;
  j["alpha_age"] = t.alpha_age;
  j["alpha_bmi"] = t.alpha_bmi;
  j["alpha_sex"] = t.alpha_sex;
  j["beta_0"] = t.beta_0;
  j["beta_bp"] = t.beta_bp;
  j["beta_bmi"] = t.beta_bmi;
  j["beta_sex"] = t.beta_sex;
  j["c"] = t.c;
  j["sigma_eps"] = t.sigma_eps;
  j["sigma_age"] = t.sigma_age;
  j["sigma_bp"] = ParameterSet::sigma_bp;
  j["age_grid"] = t.grid.knots();
  j["f"] = t.f;
  if (!t.eps.empty()) j["eps"] = t.eps;
  return j;
}

ParameterSet parameter_set_from_json(const json& j) {
  return schema_guard("parameters", [&] {
    check_schema(j, "parameters");
    ParameterSet t;
    for (const char* key : {"alpha_0", "alpha_bp", "alpha_age", "alpha_bmi", "alpha_sex", "beta_0", "beta_bp",
                            "beta_bmi", "beta_sex", "c", "sigma_eps", "sigma_age"})
      if (!j.contains(key)) throw DataError(std::string("parameters: missing field '") + key + "'");
    read(j, "alpha_0", t.alpha_0);
    read(j, "alpha_bp", t.alpha_bp);
    read(j, "alpha_age", t.alpha_age);
    read(j, "alpha_bmi", t.alpha_bmi);
    read(j, "alpha_sex", t.alpha_sex);
    read(j, "beta_0", t.beta_0);
    read(j, "beta_bp", t.beta_bp);
    read(j, "beta_bmi", t.beta_bmi);
    read(j, "beta_sex", t.beta_sex);
    read(j, "c", t.c);
    read(j, "sigma_eps", t.sigma_eps);
    read(j, "sigma_age", t.sigma_age);
    std::vector<double> knots;
    read(j, "age_grid", knots);
    if (!knots.empty()) t.grid = AgeGrid(knots);
    read(j, "f", t.f);
    read(j, "eps", t.eps);
    t.validate();
    return t;
  });
}

json to_json(const PriorSpec& p) {
  json j = header("priors");
  j["coef_mean"] = p.coef_mean;
  j["coef_sd"] = p.coef_sd;
  j["gamma_shape"] = p.gamma_shape;
  j["gamma_rate"] = p.gamma_rate;
  j["gamma_target"] = to_string(p.gamma_target);
  j["c_mean"] = p.c_mean;
  j["c_sd"] = p.c_sd;
  return j;
}

PriorSpec prior_spec_from_json(const json& j, PriorSpec p) {
  return schema_guard("priors", [&] {
    if (!j.is_object()) throw DataError("priors: expected a JSON object");
    if (j.contains("schema_version")) check_schema(j, "priors");
    read(j, "coef_mean", p.coef_mean);
    read(j, "coef_sd", p.coef_sd);
    read(j, "gamma_shape", p.gamma_shape);
    read(j, "gamma_rate", p.gamma_rate);
    if (j.contains("gamma_target")) p.gamma_target = parse_gamma_target(j.at("gamma_target").get<std::string>());
    read(j, "c_mean", p.c_mean);
    read(j, "c_sd", p.c_sd);
    p.validate();
    return p;
  });
}

json to_json(const McmcConfig& c) {
  json j{{"iterations", c.iterations},
         {"warmup", c.warmup},
         {"chains", c.chains},
         {"thin", c.thin},
         {"adaptation_window", c.adaptation_window},
         {"target_acceptance", c.target_acceptance},
         {"seed", c.seed},
         {"age_knots", c.age_knots},
         {"prior_only", c.prior_only},
         {"fixed_sigma_eps", optional_real(c.fixed_sigma_eps)},
         {"fixed_sigma_age", optional_real(c.fixed_sigma_age)}};
  return j;
}

McmcConfig mcmc_config_from_json(const json& j, McmcConfig c) {
  return schema_guard("mcmc", [&] {
    read(j, "iterations", c.iterations);
    read(j, "warmup", c.warmup);
    read(j, "chains", c.chains);
    read(j, "thin", c.thin);
    read(j, "adaptation_window", c.adaptation_window);
    read(j, "target_acceptance", c.target_acceptance);
    read(j, "seed", c.seed);
    read(j, "workers", c.workers);
    read(j, "age_knots", c.age_knots);
    read(j, "prior_only", c.prior_only);
    if (j.contains("fixed_sigma_eps")) c.fixed_sigma_eps = read_optional(j, "fixed_sigma_eps");
    if (j.contains("fixed_sigma_age")) c.fixed_sigma_age = read_optional(j, "fixed_sigma_age");
    c.validate();
    return c;
  });
}

json to_json(const PredictOptions& p) {
  return json{{"samples", p.samples},
              {"grid_nodes", p.grid_nodes},
              {"grid_halfwidth", p.grid_halfwidth},
              {"seed", p.seed}};
}

PredictOptions predict_options_from_json(const json& j, PredictOptions p) {
  return schema_guard("predict", [&] {
    read(j, "samples", p.samples);
    read(j, "grid_nodes", p.grid_nodes);
    read(j, "grid_halfwidth", p.grid_halfwidth);
    read(j, "seed", p.seed);
    read(j, "workers", p.workers);
    p.validate();
    return p;
  });
}

json to_json(const ParameterSummary& s) {
  return json{{"name", s.name}, {"mean", s.mean}, {"sd", s.sd}, {"lower", s.lower},
              {"upper", s.upper}, {"rhat", s.rhat}, {"ess", s.ess}};
}

ParameterSummary parameter_summary_from_json(const json& j) {
  ParameterSummary s;
  s.name = j.at("name").get<std::string>();
  s.mean = real_or_nan(j.at("mean"));
  s.sd = real_or_nan(j.at("sd"));
  s.lower = real_or_nan(j.at("lower"));
  s.upper = real_or_nan(j.at("upper"));
  s.rhat = real_or_nan(j.at("rhat"));
  s.ess = real_or_nan(j.at("ess"));
  return s;
}

json to_json(const FitResult& f, bool with_draws) {
  json j = header("fit");
  j["model_kind"] = to_string(f.model_kind);
  j["priors"] = to_json(f.priors);
  j["mcmc"] = to_json(f.config);
  j["standardization"] = to_json(f.standardization);
  j["age_grid"] = f.grid.knots();
  j["parameters"] = f.names;
  j["chains"] = f.chains;
  json summary = json::array();
  for (const auto& s : f.summary) summary.push_back(to_json(s));
  j["summary"] = summary;
  j["rhat_warning"] = f.rhat_warning;
  j["warnings"] = f.warnings;
  if (with_draws) j["draws"] = matrix_to_json(f.draws);
  return j;
}

FitResult fit_from_json(const json& j) {
  return schema_guard("fit", [&] {
    check_schema(j, "fit");
    FitResult f;
    f.model_kind = parse_model_kind(j.at("model_kind").get<std::string>());
    f.priors = prior_spec_from_json(j.at("priors"));
    f.config = mcmc_config_from_json(j.at("mcmc"));
    f.standardization = standardization_from_json(j.at("standardization"));
    f.grid = AgeGrid(j.at("age_grid").get<std::vector<double>>());
    f.names = j.at("parameters").get<std::vector<std::string>>();
    f.chains = j.at("chains").get<std::size_t>();
    for (const auto& s : j.at("summary")) f.summary.push_back(parameter_summary_from_json(s));
    f.rhat_warning = j.at("rhat_warning").get<bool>();
    f.warnings = j.at("warnings").get<std::vector<std::string>>();
    if (j.contains("draws")) {
      f.draws = matrix_from_json(j.at("draws"));
      if (static_cast<std::size_t>(f.draws.cols()) != f.names.size())
        throw DataError("fit: draw matrix width differs from the parameter list");
    }
    if (f.summary.size() != f.names.size()) throw DataError("fit: summary does not cover every parameter");
    return f;
  });
}

json to_json(const PredictiveDistribution& p) {
  json j = header("prediction");
  j["condition"] = to_string(p.condition);
  j["ids"] = p.ids;
  j["notes"] = p.notes;
  j["bp_f"] = matrix_to_json(p.bp_f);
  j["p"] = matrix_to_json(p.p);
  return j;
}

PredictiveDistribution prediction_from_json(const json& j) {
  return schema_guard("prediction", [&] {
    check_schema(j, "prediction");
    PredictiveDistribution p;
    p.condition = parse_conditioning(j.at("condition").get<std::string>());
    p.ids = j.at("ids").get<std::vector<std::int64_t>>();
    p.notes = j.at("notes").get<std::vector<std::string>>();
    p.bp_f = matrix_from_json(j.at("bp_f"));
    p.p = matrix_from_json(j.at("p"));
    if (static_cast<std::size_t>(p.bp_f.rows()) != p.ids.size() || p.p.rows() != p.bp_f.rows() ||
        p.p.cols() != p.bp_f.cols())
      throw DataError("prediction: matrix shapes disagree with the id list");
    return p;
  });
}

json to_json(const ScoreReport& s) {
  json j = header("scores");
  j["n_present"] = s.n_present;
  j["n_missing"] = s.n_missing;
  j["crps_present"] = s.crps_present;
  j["crps_missing"] = optional_real(s.crps_missing);
  j["crps_all"] = optional_real(s.crps_all);
  j["brier_all"] = s.brier_all;
  j["brier_present"] = optional_real(s.brier_present);
  j["brier_missing"] = optional_real(s.brier_missing);
  j["mae_present"] = s.mae_present;
  j["mae_all"] = optional_real(s.mae_all);
  return j;
}

ScoreReport score_report_from_json(const json& j) {
  return schema_guard("scores", [&] {
    check_schema(j, "scores");
    ScoreReport s;
    s.n_present = j.at("n_present").get<std::size_t>();
    s.n_missing = j.at("n_missing").get<std::size_t>();
    s.crps_present = j.at("crps_present").get<double>();
    s.crps_missing = read_optional(j, "crps_missing");
    s.crps_all = read_optional(j, "crps_all");
    s.brier_all = j.at("brier_all").get<double>();
    s.brier_present = read_optional(j, "brier_present");
    s.brier_missing = read_optional(j, "brier_missing");
    s.mae_present = j.at("mae_present").get<double>();
    s.mae_all = read_optional(j, "mae_all");
    return s;
  });
}

namespace {

json covariates_to_json(const CovariateGenConfig& c) {
  return json{{"female_probability", c.female_probability},
              {"age_weights", {c.age_weights[0], c.age_weights[1]}},
              {"age_means", {c.age_means[0], c.age_means[1]}},
              {"age_sds", {c.age_sds[0], c.age_sds[1]}},
              {"age_lower", c.age_lower},
              {"age_upper", c.age_upper},
              {"bmi_intercept", c.bmi_intercept},
              {"bmi_age", c.bmi_age},
              {"bmi_sex", c.bmi_sex},
              {"bmi_scale", c.bmi_scale},
              {"bmi_shape", c.bmi_shape},
              {"bp_intercept", c.bp_intercept},
              {"bp_sex", c.bp_sex},
              {"bp_age", c.bp_age},
              {"bp_bmi", c.bp_bmi},
              {"bp_shift", c.bp_shift},
              {"bp_scale", c.bp_scale},
              {"bp_shape", c.bp_shape}};
}

void read_pair(const json& j, const char* key, double (&out)[2]) {
  if (!j.contains(key)) return;
  const auto v = j.at(key).get<std::vector<double>>();
  if (v.size() != 2) throw DataError(std::string("covariates: '") + key + "' must have two entries");
  out[0] = v[0];
  out[1] = v[1];
}

CovariateGenConfig covariates_from_json(const json& j, CovariateGenConfig c) {
  read(j, "female_probability", c.female_probability);
  read_pair(j, "age_weights", c.age_weights);
  read_pair(j, "age_means", c.age_means);
  read_pair(j, "age_sds", c.age_sds);
  read(j, "age_lower", c.age_lower);
  read(j, "age_upper", c.age_upper);
  read(j, "bmi_intercept", c.bmi_intercept);
  read(j, "bmi_age", c.bmi_age);
  read(j, "bmi_sex", c.bmi_sex);
  read(j, "bmi_scale", c.bmi_scale);
  read(j, "bmi_shape", c.bmi_shape);
  read(j, "bp_intercept", c.bp_intercept);
  read(j, "bp_sex", c.bp_sex);
  read(j, "bp_age", c.bp_age);
  read(j, "bp_bmi", c.bp_bmi);
  read(j, "bp_shift", c.bp_shift);
  read(j, "bp_scale", c.bp_scale);
  read(j, "bp_shape", c.bp_shape);
  c.validate();
  return c;
}

json curve_to_json(const AgeEffectCurve& c) {
  return json{{"grid", c.grid}, {"mean", c.mean}, {"lower", c.lower}, {"upper", c.upper}};
}

AgeEffectCurve curve_from_json(const json& j) {
  AgeEffectCurve c;
  c.grid = j.at("grid").get<std::vector<double>>();
  c.mean = j.at("mean").get<std::vector<double>>();
  c.lower = j.at("lower").get<std::vector<double>>();
  c.upper = j.at("upper").get<std::vector<double>>();
  return c;
}

json mae_to_json(const MaeComparison& m) {
  return json{{"conditional", m.conditional},
              {"unconditional", m.unconditional},
              {"difference", m.difference},
              {"evaluated", m.evaluated},
              {"fell_back", m.fell_back}};
}

MaeComparison mae_from_json(const json& j) {
  MaeComparison m;
  m.conditional = j.at("conditional").get<double>();
  m.unconditional = j.at("unconditional").get<double>();
  m.difference = j.at("difference").get<double>();
  m.evaluated = j.at("evaluated").get<std::size_t>();
  m.fell_back = j.at("fell_back").get<bool>();
  return m;
}

}  // namespace

json to_json(const StudyConfig& c) {
  json j = header("study-config");
  j["study_kind"] = to_string(c.kind);
  j["replicates"] = c.replicates;
  j["n_train"] = c.n_train;
  j["n_valid"] = c.n_valid;
  j["regime"] = to_string(c.regime);
  j["seed"] = c.seed;
  j["record_timing"] = c.record_timing;
  j["theta"] = to_json(c.theta);
  j["priors"] = to_json(c.priors);
  j["mcmc"] = to_json(c.mcmc);
  j["predict"] = to_json(c.predict);
  json variants = json::array();
  for (const auto& v : c.prior_variants) variants.push_back({{"label", v.label}, {"c_mean", v.c_mean}, {"c_sd", v.c_sd}});
  j["prior_variants"] = variants;
  j["covariates"] = covariates_to_json(c.covariates);
  return j;
}

StudyConfig study_config_from_json(const json& j, StudyConfig c) {
  return schema_guard("study config", [&] {
    if (!j.is_object()) throw DataError("study config: expected a JSON object");
    if (j.contains("schema_version")) check_schema(j, "study-config");
    if (j.contains("study_kind")) c.kind = parse_study_kind(j.at("study_kind").get<std::string>());
    read(j, "replicates", c.replicates);
    read(j, "n_train", c.n_train);
    read(j, "n_valid", c.n_valid);
    if (j.contains("regime")) c.regime = parse_regime(j.at("regime").get<std::string>());
    read(j, "seed", c.seed);
    read(j, "workers", c.workers);
    read(j, "record_timing", c.record_timing);
    if (j.contains("theta")) c.theta = parameter_set_from_json(j.at("theta"));
    if (j.contains("priors")) c.priors = prior_spec_from_json(j.at("priors"), c.priors);
    if (j.contains("mcmc")) c.mcmc = mcmc_config_from_json(j.at("mcmc"), c.mcmc);
    if (j.contains("predict")) c.predict = predict_options_from_json(j.at("predict"), c.predict);
    if (j.contains("prior_variants")) {
      c.prior_variants.clear();
      for (const auto& v : j.at("prior_variants"))
        c.prior_variants.push_back({v.at("label").get<std::string>(), v.at("c_mean").get<double>(),
                                    v.at("c_sd").get<double>()});
    }
    if (j.contains("covariates")) c.covariates = covariates_from_json(j.at("covariates"), c.covariates);
    c.validate();
    return c;
  });
}

json to_json(const StudyReport& r) {
  json j = header("study");
  j["study_kind"] = to_string(r.kind);
  j["config"] = to_json(r.config);
  json truth = json::array();
  for (const auto& t : r.truth)
    truth.push_back({{"regime", to_string(t.regime)}, {"parameter", t.parameter}, {"value", optional_real(t.value)}});
  j["truth"] = truth;
  json records = json::array();
  for (const auto& rec : r.records) {
    json x{{"replicate", rec.replicate},
           {"regime", to_string(rec.regime)},
           {"model", to_string(rec.model)},
           {"variant", rec.variant},
           {"failed", rec.failed},
           {"error", rec.error},
           {"warnings", rec.warnings}};
    json params = json::array();
    for (const auto& p : rec.parameters) params.push_back(to_json(p));
    x["parameters"] = params;
    if (rec.scores) x["scores"] = to_json(*rec.scores);
    if (rec.mae) x["mae"] = mae_to_json(*rec.mae);
    if (rec.age_curve) x["age_curve"] = curve_to_json(*rec.age_curve);
    records.push_back(x);
  }
  j["records"] = records;
  json aggregates = json::array();
  for (const auto& a : r.aggregates)
    aggregates.push_back({{"regime", to_string(a.regime)},
                          {"model", to_string(a.model)},
                          {"parameter", a.parameter},
                          {"truth", optional_real(a.truth)},
                          {"mean", a.mean},
                          {"bias", optional_real(a.bias)},
                          {"coverage", optional_real(a.coverage)},
                          {"count", a.count}});
  j["aggregates"] = aggregates;
  json diffs = json::array();
  for (const auto& d : r.bias_differences)
    diffs.push_back({{"regime", to_string(d.regime)},
                     {"parameter", d.parameter},
                     {"difference", d.difference},
                     {"abs_reduction", d.abs_reduction}});
  j["bias_differences"] = diffs;
  j["failed"] = r.failed;
  if (r.runtime_seconds) j["runtime_seconds"] = *r.runtime_seconds;
  return j;
}

StudyReport study_report_from_json(const json& j) {
  return schema_guard("study", [&] {
    check_schema(j, "study");
    StudyReport r;
    r.kind = parse_study_kind(j.at("study_kind").get<std::string>());
    r.config = study_config_from_json(j.at("config"), StudyConfig{});
    for (const auto& t : j.at("truth"))
      r.truth.push_back({parse_regime(t.at("regime").get<std::string>()), t.at("parameter").get<std::string>(),
                         read_optional(t, "value")});
    for (const auto& x : j.at("records")) {
      ReplicateRecord rec;
      rec.replicate = x.at("replicate").get<std::size_t>();
      rec.regime = parse_regime(x.at("regime").get<std::string>());
      rec.model = parse_model_kind(x.at("model").get<std::string>());
      rec.variant = x.at("variant").get<std::string>();
      rec.failed = x.at("failed").get<bool>();
      rec.error = x.at("error").get<std::string>();
      rec.warnings = x.at("warnings").get<std::vector<std::string>>();
      for (const auto& p : x.at("parameters")) rec.parameters.push_back(parameter_summary_from_json(p));
      if (x.contains("scores")) rec.scores = score_report_from_json(x.at("scores"));
      if (x.contains("mae")) rec.mae = mae_from_json(x.at("mae"));
      if (x.contains("age_curve")) rec.age_curve = curve_from_json(x.at("age_curve"));
      r.records.push_back(std::move(rec));
    }
    for (const auto& a : j.at("aggregates")) {
      AggregateRow row;
      row.regime = parse_regime(a.at("regime").get<std::string>());
      row.model = parse_model_kind(a.at("model").get<std::string>());
      row.parameter = a.at("parameter").get<std::string>();
      row.truth = read_optional(a, "truth");
      row.mean = a.at("mean").get<double>();
      row.bias = read_optional(a, "bias");
      row.coverage = read_optional(a, "coverage");
      row.count = a.at("count").get<std::size_t>();
      r.aggregates.push_back(row);
    }
    for (const auto& d : j.at("bias_differences"))
      r.bias_differences.push_back({parse_regime(d.at("regime").get<std::string>()), d.at("parameter").get<std::string>(),
                                    d.at("difference").get<double>(), d.at("abs_reduction").get<double>()});
    r.failed = j.at("failed").get<std::size_t>();
    if (j.contains("runtime_seconds")) r.runtime_seconds = j.at("runtime_seconds").get<double>();
    return r;
  });
}

// ---- files -----------------------------------------------------------------

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "' for reading");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

json load_json(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": invalid JSON: " + e.what());
  }
}

void save_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::filesystem::path default_output_dir() {
  if (const char* env = std::getenv("SPM_OUTPUT_DIR"); env && *env) return env;
  return ".";
}

}  // namespace spm::io
