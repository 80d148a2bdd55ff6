#include "blevaa/signal_model.hpp"

#include <cmath>

namespace blevaa {

Eigen::VectorXcd spatial_steering(const VaaGeometry& geometry, const RadioConfig& config, double doa_rad) {
    config.validate();
    geometry.validate(config);
    const Eigen::Index n_pos = config.num_positions;
    Eigen::VectorXcd a(n_pos);
    const double k = 2.0 * kPi / config.carrier_wavelength_m;
    for (Eigen::Index n = 0; n < n_pos; ++n) {
        const auto i = static_cast<std::size_t>(n);
        a(n) = std::polar(1.0, k * geometry.displacement_m[i] * std::cos(doa_rad - geometry.direction_rad[i]));
    }
    return a;
}

Eigen::VectorXcd frequency_steering(double subcarrier_spacing_hz, int length, double toa_s) {
    if (toa_s < 0.0 || !std::isfinite(toa_s)) throw std::invalid_argument("delay must be finite and non-negative");
    Eigen::VectorXcd a(length);
    for (int m = 0; m < length; ++m) a(m) = std::polar(1.0, 2.0 * kPi * m * subcarrier_spacing_hz * toa_s);
    return a;
}

Eigen::VectorXcd frequency_steering(const RadioConfig& config, double toa_s) {
    config.validate();
    return frequency_steering(config.subcarrier_spacing_hz, config.num_subcarriers, toa_s);
}

CfrMatrix noiseless_cfr(const VaaGeometry& geometry, const RadioConfig& config, const PathSet& paths) {
    config.validate();
    geometry.validate(config);
    validate_paths(paths);
    CfrMatrix y = CfrMatrix::Zero(config.num_positions, config.num_subcarriers);
    for (const auto& p : paths) {
        const Eigen::VectorXcd a_s = spatial_steering(geometry, config, p.doa_rad);
        const Eigen::VectorXcd a_f = frequency_steering(config, p.toa_s);
        y.noalias() += p.gain * (a_s * a_f.adjoint());
    }
    return y;
}

CfrMatrix complex_noise(Eigen::Index rows, Eigen::Index cols, double noise_std, std::mt19937_64& rng) {
    if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) throw std::invalid_argument("noise_std must be >= 0");
    CfrMatrix w(rows, cols);
    std::normal_distribution<double> normal(0.0, noise_std / std::sqrt(2.0));
    // Column-major fill order keeps draws reproducible for a given seed.
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        const double re = normal(rng);
        const double im = normal(rng);
        w.data()[i] = cdouble(re, im);
    }
    return w;
}

CfrMatrix synthesize_cfr(const VaaGeometry& geometry, const RadioConfig& config, const PathSet& paths,
                         double noise_std, std::mt19937_64& rng) {
    CfrMatrix y = noiseless_cfr(geometry, config, paths);
    if (noise_std > 0.0) y += complex_noise(y.rows(), y.cols(), noise_std, rng);
    else if (noise_std < 0.0 || !std::isfinite(noise_std)) throw std::invalid_argument("noise_std must be >= 0");
    return y;
}

double noise_std_from_snr_db(double snr_db) {
    if (!std::isfinite(snr_db)) return 0.0;
    return std::sqrt(std::pow(10.0, -snr_db / 10.0));
}

VaaGeometry perturb_geometry(const VaaGeometry& geometry, double displacement_std_m, double direction_std_rad,
                             std::mt19937_64& rng) {
    if (displacement_std_m < 0.0 || direction_std_rad < 0.0)
        throw std::invalid_argument("geometry noise must be non-negative");
    if (displacement_std_m == 0.0 && direction_std_rad == 0.0) return geometry;
    VaaGeometry out = geometry;
    std::normal_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 1; i < out.size(); ++i) {
        out.displacement_m[i] = std::max(0.0, out.displacement_m[i] + displacement_std_m * unit(rng));
        out.direction_rad[i] += direction_std_rad * unit(rng);
    }
    return out;
}

}  // namespace blevaa
