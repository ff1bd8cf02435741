#pragma once
// CSV tables and SVG figures for fits and study reports. Every figure is
// written next to a CSV holding its numbers.

#include <filesystem>
#include <vector>

#include "spm/inference.hpp"
#include "spm/study.hpp"

namespace spm::report {

std::vector<std::filesystem::path> write_fit_report(const FitResult& fit, const std::filesystem::path& dir);
std::vector<std::filesystem::path> write_study_report(const StudyReport& report, const std::filesystem::path& dir);

}  // namespace spm::report
