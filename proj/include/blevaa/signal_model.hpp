#pragma once

#include <random>

#include "blevaa/types.hpp"

namespace blevaa {

/// Per-position phase response to a far-field plane wave from bearing `doa_rad`.
Eigen::VectorXcd spatial_steering(const VaaGeometry& geometry, const RadioConfig& config, double doa_rad);

/// exp(j 2 pi m df tau) for m = 0..M-1.
Eigen::VectorXcd frequency_steering(const RadioConfig& config, double toa_s);

/// Same as above with an explicit length (used for sub-band steering).
Eigen::VectorXcd frequency_steering(double subcarrier_spacing_hz, int length, double toa_s);

/// Noiseless one-way response: sum over paths of c * a_spatial * a_freq^H.
CfrMatrix noiseless_cfr(const VaaGeometry& geometry, const RadioConfig& config, const PathSet& paths);

/// Circular complex Gaussian matrix, total variance noise_std^2 per entry.
CfrMatrix complex_noise(Eigen::Index rows, Eigen::Index cols, double noise_std, std::mt19937_64& rng);

/// Noisy one-way response; `rng` is consumed only when noise_std > 0.
CfrMatrix synthesize_cfr(const VaaGeometry& geometry, const RadioConfig& config, const PathSet& paths,
                         double noise_std, std::mt19937_64& rng);

/// Noise standard deviation for SNR = 10 log10(1 / sigma^2) with a unit-amplitude reference path.
double noise_std_from_snr_db(double snr_db);

/// Returns the geometry with additive Gaussian errors on d and phi (element 0 untouched).
/// Zero standard deviations return the input unchanged.
VaaGeometry perturb_geometry(const VaaGeometry& geometry, double displacement_std_m, double direction_std_rad,
                             std::mt19937_64& rng);

}  // namespace blevaa
