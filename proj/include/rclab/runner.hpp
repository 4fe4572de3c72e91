#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rclab/preanalysis.hpp"
#include "rclab/rate_control.hpp"
#include "rclab/scenario.hpp"
#include "rclab/yuv_io.hpp"

namespace rclab {

struct RunConfig {
    std::string mode = "sim"; // sim | analyze
    Scheme scheme = Scheme::proposed;
    std::vector<uint64_t> seeds = {0};
    std::vector<double> bitrates;
    std::optional<double> noise_sigma; // overrides the scenario's noise when set
    std::filesystem::path output_dir = "out";
    std::optional<ScenarioSpec> scenario;
    std::optional<std::filesystem::path> yuv_path;
    VideoSpec yuv_spec;
    bool dump_cu_stats = false;
    bool dump_luma = false;
    RateControlConfig rc;
    PreAnalysisConfig pre;

    void validate() const;
};

RunConfig load_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
nlohmann::json run_config_to_json(const RunConfig& cfg);

struct SubRunResult {
    double bitrate = 0.0;
    uint64_t seed = 0;
    double target_bitrate = 0.0;
    double actual_bitrate = 0.0;
    double be_permille = 0.0;
    double mean_psnr = 0.0;
    int64_t total_bits = 0;
    int frames = 0;
};

struct RunSummary {
    std::string mode;
    std::string scenario_name;
    Scheme scheme = Scheme::proposed;
    std::vector<SubRunResult> runs;
    int frames = 0;
    double mean_epp = 0.0;
    std::filesystem::path frames_csv;
    std::filesystem::path summary_json;
};

// Executes the configured runs (one per bitrate x seed in sim mode, a single
// analysis pass in analyze mode) and writes frames.csv, summary.json and
// config.echo.json into output_dir.
RunSummary run(const RunConfig& cfg);

} // namespace rclab
