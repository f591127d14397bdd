#pragma once

#include "ppfilter/bench.hpp"
#include "ppfilter/event_data.hpp"
#include "ppfilter/inference.hpp"
#include "ppfilter/simulate.hpp"

#include <json.hpp>

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace ppcli {

using json = nlohmann::json;

/// Bad flags or configuration values; exit code 1.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

[[nodiscard]] std::vector<std::string> split_list(const std::string& text);
/// Comma separated numbers; `inf` and `-inf` are accepted.
[[nodiscard]] std::vector<double> parse_number_list(const std::string& text);
[[nodiscard]] double parse_number(const std::string& text);

/// Number or the strings "inf" / "-inf".
[[nodiscard]] double json_number(const json& value);
[[nodiscard]] std::vector<double> json_number_list(const json& value);
[[nodiscard]] json number_to_json(double value);

[[nodiscard]] json read_json_file(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Fit settings from a merged run configuration. `inputs` defaults to every
/// channel of the data.
[[nodiscard]] ppfilter::FitConfig fit_config_from_json(const json& run, const ppfilter::EventData& data);

/// Simulation model plus number of trials from a simulation config document.
struct SimulationPlan {
    ppfilter::SimConfig config;
    std::size_t trials{1};
};
[[nodiscard]] SimulationPlan simulation_from_json(const json& doc);

[[nodiscard]] json fit_to_json(const ppfilter::FitResult& fit, const ppfilter::FitConfig& config,
                               const ppfilter::EventData& data);

[[nodiscard]] std::string csv_field(const std::string& text);
[[nodiscard]] std::string format_number(double value);

[[nodiscard]] std::string band_csv(const ppfilter::FilterBand& band);
[[nodiscard]] std::string cv_csv(const ppfilter::CvResult& cv);
[[nodiscard]] std::string tic_csv(const ppfilter::ScanResult& scan, const std::string& family);
[[nodiscard]] std::string bench_csv(const std::vector<ppfilter::BenchRow>& rows);

} // namespace ppcli
