#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "blevaa/predictor.hpp"
#include "blevaa/scenario.hpp"
#include "blevaa/sign_recovery.hpp"
#include "blevaa/twoway_cfr.hpp"

namespace blevaa {

/// One simulated exchange: the one-way reference, what the initiator observes and the true signs.
struct Realization {
    Scenario scenario;
    CfrMatrix one_way;       ///< the response the signs are defined against
    CfrMatrix two_way;
    CfrMatrix two_way_sqrt;
    SignMatrix signs;        ///< two_way_sqrt = one_way o signs, normalized
    double noise_std = 0.0;
};

/// Synthesizes a noisy exchange for a drawn scenario.
///
/// In shared mode the reference is the noisy one-way response and the two-way response is
/// its exact square. In per_direction mode the reference is the noiseless response.
Realization simulate_realization(Scenario scenario, const RadioConfig& radio, double noise_std, NoiseMode mode,
                                 std::mt19937_64& rng);

struct DatasetRecord {
    CfrMatrix two_way;
    LabelMatrices labels;
    VaaGeometry geometry;
    PathSet truth;
    double snr_db = 0.0;
    std::uint64_t seed = 0;
};

struct DatasetSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;
};

struct Dataset {
    RadioConfig radio;
    std::vector<DatasetRecord> records;
    DatasetSplit split;
};

/// Fractions of the split; test takes the remainder.
inline constexpr double kTrainFraction = 0.6;
inline constexpr double kValidationFraction = 0.2;

/// Split sizes for `count` records: floor(0.6 count), floor(0.2 count), remainder.
DatasetSplit split_indices(std::size_t count, std::uint64_t seed);

/// Draws `count` records (count >= 10). Record i uses its own stream derived from `seed`
/// and an SNR uniform over the configured dataset range.
Dataset generate_dataset(std::size_t count, std::uint64_t seed, const ScenarioConfig& scenario,
                         const RadioConfig& radio, NoiseMode mode = NoiseMode::shared);

/// Re-simulates the scenarios of the selected records at a fixed SNR (fresh LO offsets and noise).
/// The result holds only those records, all assigned to the test split.
Dataset resynthesize(const Dataset& dataset, const std::vector<std::size_t>& indices, double snr_db,
                     std::uint64_t seed, NoiseMode mode = NoiseMode::shared);

/// Writes records.jsonl (one record per line) and split.json into `dir`, creating it if needed.
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

/// Sign matrix implied by a record's labels (N(0,0) = +1).
SignMatrix signs_from_labels(const LabelMatrices& labels);

/// Training samples for one axis: every row (targets q) or every column (targets p) of the selected records.
std::vector<Sample> make_samples(const Dataset& dataset, const std::vector<std::size_t>& indices, SliceAxis axis);

struct SignAccuracyReport {
    std::size_t records = 0;
    double row_accuracy = 0.0;     ///< thresholded row probabilities vs q
    double column_accuracy = 0.0;  ///< thresholded column probabilities vs p
    double sign_accuracy = 0.0;    ///< resolved sign matrix vs truth
};

/// Learned predictors on the selected records.
SignAccuracyReport evaluate_learned(const Dataset& dataset, const std::vector<std::size_t>& indices,
                                    const PredictorModel& row_model, const PredictorModel& col_model);

/// Continuity baseline on the selected records.
SignAccuracyReport evaluate_continuity(const Dataset& dataset, const std::vector<std::size_t>& indices);

}  // namespace blevaa
