#pragma once

#include <string>
#include <vector>

#include "blevaa/config.hpp"
#include "blevaa/dataset.hpp"
#include "blevaa/superres.hpp"

namespace blevaa {

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;  ///< standard error of the mean (sample std / sqrt(n)); 0 for one value
};

/// Mean and standard error; throws std::invalid_argument on an empty list.
MeanSe mse(const std::vector<double>& squared_errors);

/// Estimators compared by the sweep.
inline const std::vector<std::string> kKnownMethods{"oracle", "learned", "twoway", "continuity"};

struct SweepModels {
    const PredictorModel* row = nullptr;
    const PredictorModel* col = nullptr;
};

/// Estimates of one method on one realization. `degenerate` mirrors the peak search flag.
EstimateSet run_method(const std::string& method, const Realization& realization, const VaaGeometry& geometry,
                       const RadioConfig& radio, const MusicConfig& mcfg, const SweepModels& models);

/// Squared DoA (deg^2) and ToA (ns^2) error of the estimate closest to a true path, where closeness
/// is the Euclidean distance in grid steps.
struct SquaredError {
    double doa_deg2 = 0.0;
    double toa_ns2 = 0.0;
};

SquaredError matched_error(const EstimateSet& estimates, const Path& truth, const MusicConfig& mcfg);

/// LoS error ("los") or the mean of the per-path matched errors ("all_paths").
SquaredError trial_error(const EstimateSet& estimates, const PathSet& truth, const MusicConfig& mcfg,
                         const std::string& metric);

struct SweepRow {
    double snr_db = 0.0;
    std::string method;
    double mse_doa_deg2 = 0.0;
    double se_doa = 0.0;
    double mse_toa_ns2 = 0.0;
    double se_toa = 0.0;
    int trials = 0;
    double crlb_doa_deg2 = 0.0;
    double crlb_toa_ns2 = 0.0;
    std::vector<double> doa_errors;  ///< per trial, deg^2, trial order
    std::vector<double> toa_errors;  ///< per trial, ns^2, trial order
};

struct SweepResult {
    std::vector<SweepRow> rows;  ///< SNR-major, methods in requested order

    const SweepRow& at(double snr_db, const std::string& method) const;
    std::string to_csv() const;
};

/// Paired Monte-Carlo comparison of the configured methods over the configured SNR grid.
/// Trial t at SNR index s draws from derive_seed(sweep.seed, s, t), so results do not depend on
/// the thread count. The CRLB columns average the bound over realizations where it exists.
SweepResult run_sweep(const ExperimentConfig& cfg, const SweepModels& models = {});

struct CrlbPoint {
    double snr_db = 0.0;
    double doa_deg2 = 0.0;
    double toa_ns2 = 0.0;
    int realizations = 0;  ///< realizations with a non-singular Fisher matrix
};

/// Mean CRLB of the error-metric paths over `sweep.trials` scenarios per SNR.
std::vector<CrlbPoint> crlb_curve(const ExperimentConfig& cfg);
std::string crlb_csv(const std::vector<CrlbPoint>& points);

/// CSV with header theta_deg,tau_ns,P, DoA-major.
std::string spectrum_csv(const Pseudospectrum& spectrum);

/// Oracle-sign pseudospectrum of the realization drawn from `seed` at the configured SNR.
Pseudospectrum single_realization_spectrum(const ExperimentConfig& cfg, std::uint64_t seed);

}  // namespace blevaa
