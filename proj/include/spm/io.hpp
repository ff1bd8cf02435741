#pragma once
// File formats: cohort CSV, JSON documents for parameters, priors, fits,
// predictions, scores and study reports.

#include <Eigen/Dense>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "spm/cohort.hpp"
#include "spm/inference.hpp"
#include "spm/model.hpp"
#include "spm/prediction.hpp"
#include "spm/study.hpp"

namespace spm::io {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

// ---- cohort CSV -----------------------------------------------------------
// Header: id,sex,age_std,bmi_std,bp_i_std,bp_f_std,m,age_years,oracle_bp_f_std
// (the oracle column is optional on input). Reals use 17 significant digits.
void write_cohort_csv(std::ostream& out, const Cohort& cohort, bool with_oracle = true);
// Without explicit constants, the age scale is recovered from the
// age_years and age_std columns; the other variables get the identity.
Cohort read_cohort_csv(std::istream& in, const std::optional<Standardization>& standardization = std::nullopt);

void save_cohort(const std::filesystem::path& path, const Cohort& cohort, bool with_oracle = true);
Cohort load_cohort(const std::filesystem::path& path,
                   const std::optional<Standardization>& standardization = std::nullopt);

// ---- binary blobs ---------------------------------------------------------
std::string base64_encode(const std::string& bytes);
std::string base64_decode(const std::string& text);
std::string zlib_compress(const std::string& bytes);
std::string zlib_decompress(const std::string& bytes, std::size_t size);
json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const json& j);

// ---- JSON conversions -------------------------------------------------------
json to_json(const Standardization& s);
Standardization standardization_from_json(const json& j);
json to_json(const ParameterSet& t);
ParameterSet parameter_set_from_json(const json& j);
json to_json(const PriorSpec& p);
PriorSpec prior_spec_from_json(const json& j, PriorSpec base = {});
json to_json(const McmcConfig& c);
McmcConfig mcmc_config_from_json(const json& j, McmcConfig base = {});
json to_json(const PredictOptions& p);
PredictOptions predict_options_from_json(const json& j, PredictOptions base = {});
json to_json(const ParameterSummary& s);
ParameterSummary parameter_summary_from_json(const json& j);
json to_json(const FitResult& f, bool with_draws = true);
FitResult fit_from_json(const json& j);
json to_json(const PredictiveDistribution& p);
PredictiveDistribution prediction_from_json(const json& j);
json to_json(const ScoreReport& s);
ScoreReport score_report_from_json(const json& j);
json to_json(const StudyConfig& c);
// Fields absent from `j` keep the values of `base`.
StudyConfig study_config_from_json(const json& j, StudyConfig base);
json to_json(const StudyReport& r);
StudyReport study_report_from_json(const json& j);

// ---- files -----------------------------------------------------------------
json load_json(const std::filesystem::path& path);
void save_json(const std::filesystem::path& path, const json& j);
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

// Default directory for outputs: $SPM_OUTPUT_DIR if set, else ".".
std::filesystem::path default_output_dir();

}  // namespace spm::io
