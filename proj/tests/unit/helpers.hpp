#pragma once

#include <cmath>
#include <random>

#include "blevaa/types.hpp"

namespace testutil {

using namespace blevaa;

inline RadioConfig small_radio(int n, int m) {
    RadioConfig r;
    r.num_positions = n;
    r.num_subcarriers = m;
    return r;
}

// Random walk with steps in [lambda/4, lambda/2] and headings in [-pi/4, pi/4].
inline VaaGeometry random_geometry(const RadioConfig& radio, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double lambda = radio.carrier_wavelength_m;
    std::vector<double> x(static_cast<std::size_t>(radio.num_positions), 0.0), y(x.size(), 0.0);
    for (std::size_t n = 1; n < x.size(); ++n) {
        const double step = lambda * (0.25 + 0.25 * u(rng));
        const double heading = -kPi / 4 + kPi / 2 * u(rng);
        x[n] = x[n - 1] + step * std::cos(heading);
        y[n] = y[n - 1] + step * std::sin(heading);
    }
    return VaaGeometry::from_positions(x, y);
}

inline PathSet random_paths(int count, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    PathSet paths;
    for (int l = 0; l < count; ++l) {
        const double amp = l == 0 ? 1.0 : 0.2 + 0.6 * u(rng);
        paths.push_back({0.1 + (kPi - 0.2) * u(rng), 60e-9 + 200e-9 * u(rng), std::polar(amp, 2 * kPi * u(rng))});
    }
    return paths;
}

inline CfrMatrix random_cfr(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    CfrMatrix y(rows, cols);
    for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = cdouble(g(rng), g(rng));
    return y;
}

inline SignMatrix random_signs(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::bernoulli_distribution b(0.5);
    Eigen::MatrixXi v(rows, cols);
    for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = b(rng) ? 1 : -1;
    return SignMatrix(v).normalized();
}

inline double rel_error(const CfrMatrix& a, const CfrMatrix& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

}  // namespace testutil
