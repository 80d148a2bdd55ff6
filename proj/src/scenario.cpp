#include "blevaa/scenario.hpp"

#include <cmath>

namespace blevaa {

void ScenarioConfig::validate() const {
    auto ordered = [](double lo, double hi, const char* what) {
        if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi)
            throw std::invalid_argument(std::string(what) + " range must be finite and ordered");
    };
    if (!(area_side_m > 0.0)) throw std::invalid_argument("area_side_m must be positive");
    ordered(distance_min_m, distance_max_m, "distance");
    if (!(distance_min_m > 0.0)) throw std::invalid_argument("distance_min_m must be positive");
    if (nlos_min < 0 || nlos_min > nlos_max) throw std::invalid_argument("nlos range must be ordered and non-negative");
    ordered(spacing_min_wavelengths, spacing_max_wavelengths, "spacing");
    if (!(spacing_min_wavelengths > 0.0) || spacing_max_wavelengths > 0.5)
        throw std::invalid_argument("element spacing must lie in (0, 0.5] wavelengths");
    ordered(direction_min_rad, direction_max_rad, "direction");
    ordered(nlos_amplitude_min, nlos_amplitude_max, "nlos amplitude");
    if (!(nlos_amplitude_min > 0.0)) throw std::invalid_argument("nlos amplitudes must be positive");
    ordered(dataset_snr_min_db, dataset_snr_max_db, "dataset snr");
    if (!std::isfinite(snr_db)) throw std::invalid_argument("snr_db must be finite");
    if (displacement_noise_m < 0.0 || direction_noise_rad < 0.0)
        throw std::invalid_argument("geometry noise must be non-negative");
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    std::uint64_t h = mix(seed);
    h = mix(h ^ a);
    h = mix(h ^ b);
    h = mix(h ^ c);
    return h;
}

Scenario gen_scenario(const ScenarioConfig& cfg, const RadioConfig& radio, std::mt19937_64& rng) {
    cfg.validate();
    radio.validate();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
    auto phase = [&]() { return uniform(0.0, 2.0 * kPi); };

    Scenario s;
    const double r = uniform(cfg.distance_min_m, cfg.distance_max_m);
    const double bearing = uniform(0.0, kPi);
    s.ue_x_m = -r * std::cos(bearing);
    s.ue_y_m = -r * std::sin(bearing);
    s.paths.push_back({bearing, r / kSpeedOfLight, std::polar(1.0, phase())});

    const int nlos = std::uniform_int_distribution<int>(cfg.nlos_min, cfg.nlos_max)(rng);
    const double half = 0.5 * cfg.area_side_m;
    for (int k = 0; k < nlos; ++k) {
        double sx = 0.0, sy = 0.0;
        // The square always extends above the UE (UE y <= 0), so this terminates quickly.
        do {
            sx = uniform(-half, half);
            sy = uniform(-half, half);
        } while (!(sy > s.ue_y_m));
        const double vx = sx - s.ue_x_m;
        const double vy = sy - s.ue_y_m;
        const double length = std::hypot(sx, sy) + std::hypot(vx, vy);
        const double amp = uniform(cfg.nlos_amplitude_min, cfg.nlos_amplitude_max);
        s.paths.push_back({std::atan2(vy, vx), length / kSpeedOfLight, std::polar(amp, phase())});
    }

    const double lambda = radio.carrier_wavelength_m;
    std::vector<double> x(static_cast<std::size_t>(radio.num_positions), 0.0);
    std::vector<double> y(x.size(), 0.0);
    for (std::size_t n = 1; n < x.size(); ++n) {
        const double step = lambda * uniform(cfg.spacing_min_wavelengths, cfg.spacing_max_wavelengths);
        const double heading = uniform(cfg.direction_min_rad, cfg.direction_max_rad);
        x[n] = x[n - 1] + step * std::cos(heading);
        y[n] = y[n - 1] + step * std::sin(heading);
    }
    s.geometry = VaaGeometry::from_positions(x, y);
    return s;
}

}  // namespace blevaa
