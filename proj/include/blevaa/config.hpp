#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "blevaa/predictor.hpp"
#include "blevaa/scenario.hpp"
#include "blevaa/superres.hpp"
#include "blevaa/twoway_cfr.hpp"

namespace blevaa {

struct ModelShapeConfig {
    std::vector<int> row_widths{16, 32, 64, 64, 64};
    std::vector<int> col_widths{32, 64, 128, 128};
    int kernel = 3;
};

struct SweepConfig {
    std::vector<double> snr_db{0.0, 5.0, 10.0, 15.0, 20.0};
    int trials = 200;
    std::vector<std::string> methods{"oracle", "twoway", "continuity"};
    std::uint64_t seed = 1;
    std::string error_metric = "los";  ///< "los" or "all_paths"
    int threads = 1;                   ///< 0 picks the hardware concurrency
};

/// Everything a CLI run needs; each section maps one-to-one onto a config-file object.
struct ExperimentConfig {
    RadioConfig radio;
    ScenarioConfig scenario;
    MusicConfig music;
    TrainConfig train;
    ModelShapeConfig model;
    SweepConfig sweep;
    NoiseMode noise_mode = NoiseMode::shared;

    void validate() const;
};

/// Parses a JSON config. Sections and keys are optional (defaults apply) but unknown keys are errors.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const ExperimentConfig& config);

}  // namespace blevaa
