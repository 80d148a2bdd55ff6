#pragma once

#include <cstdint>
#include <random>

#include "blevaa/types.hpp"

namespace blevaa {

/// 2D propagation scenario: base station at the origin, UE in the far field, scatterers in a
/// square area, and a virtual array traced by the UE's motion.
struct ScenarioConfig {
    double area_side_m = 40.0;
    double distance_min_m = 20.0;
    double distance_max_m = 30.0;
    int nlos_min = 1;
    int nlos_max = 3;
    double spacing_min_wavelengths = 0.25;
    double spacing_max_wavelengths = 0.5;
    double direction_min_rad = -kPi / 4.0;
    double direction_max_rad = kPi / 4.0;
    double nlos_amplitude_min = 0.2;
    double nlos_amplitude_max = 0.8;
    double snr_db = 10.0;
    double dataset_snr_min_db = 0.0;
    double dataset_snr_max_db = 20.0;
    double displacement_noise_m = 0.0;
    double direction_noise_rad = 0.0;
    std::uint64_t seed = 1;

    void validate() const;
};

struct Scenario {
    VaaGeometry geometry;
    PathSet paths;  ///< LoS first
    double ue_x_m = 0.0;
    double ue_y_m = 0.0;
};

/// Draws one scenario.
///
/// The UE sits at distance r ~ U[distance range] along bearing beta + pi from the base station,
/// beta ~ U[0, pi), so the LoS arrives from beta. Scatterers are uniform over the square area,
/// restricted to the half-plane in front of the UE (arrival bearing in (0, pi)). The array is a
/// walk of N - 1 steps, each with length ~ U[spacing range] * lambda and heading ~ U[direction range].
Scenario gen_scenario(const ScenarioConfig& cfg, const RadioConfig& radio, std::mt19937_64& rng);

/// Deterministic 64-bit mix of a seed and stream coordinates (splitmix64 chain).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

}  // namespace blevaa
