#pragma once

#include <vector>

#include "blevaa/types.hpp"

namespace blevaa {

/// Evenly spaced search axis; nodes are start + k * step up to and including stop.
struct GridSpec {
    double start = 0.0;
    double stop = 0.0;
    double step = 1.0;

    std::vector<double> nodes() const;
    void validate(const char* name) const;
};

struct MusicConfig {
    int model_order = 1;      ///< assumed number of paths L
    int subband_length = 16;  ///< frequency smoothing window M_s
    GridSpec doa_grid{0.0, 179.75 * kPi / 180.0, 0.25 * kPi / 180.0};
    GridSpec toa_grid{0.0, 400e-9, 0.5e-9};
    bool forward_backward = false;
    bool refine = true;  ///< continuous polish of each grid peak

    void validate(const RadioConfig& radio) const;
};

/// Steering phases are multiplied by this factor; 2 targets the self-terms of a two-way response.
struct SteeringScale {
    double factor = 1.0;
};

/// (1/M) sum over columns of y_m y_m^H.
Eigen::MatrixXcd spatial_covariance(const CfrMatrix& y);

/// Average outer product of vectorized N x M_s sub-blocks over all M - M_s + 1 windows.
/// Vectorization is column-major: index n + N * j.
Eigen::MatrixXcd smoothed_joint_covariance(const CfrMatrix& y, int subband_length, bool forward_backward = false);

struct SubspaceSplit {
    Eigen::VectorXd eigenvalues;  ///< descending
    Eigen::MatrixXcd signal;      ///< eigenvectors of the `order` largest eigenvalues
    Eigen::MatrixXcd noise;       ///< remaining eigenvectors
};

/// Eigen-decomposes a Hermitian matrix; ties ordered by descending value then ascending index.
SubspaceSplit split_subspace(const Eigen::MatrixXcd& cov, int order);

/// Joint spatial-frequency steering vector vec(a_spatial * a_freq^H) over an M_s sub-band.
Eigen::VectorXcd joint_steering(const VaaGeometry& geometry, const RadioConfig& config, int subband_length,
                                double doa_rad, double toa_s, SteeringScale scale = {});

struct Pseudospectrum {
    std::vector<double> doa_rad;
    std::vector<double> toa_s;
    Eigen::MatrixXd power;  ///< rows follow doa_rad, columns follow toa_s
};

/// MUSIC pseudospectrum over the configured grid: 1 / ||E_n^H a(theta, tau)||^2.
Pseudospectrum music_spectrum(const Eigen::MatrixXcd& cov, const VaaGeometry& geometry, const RadioConfig& config,
                              const MusicConfig& mcfg, SteeringScale scale = {});

/// Same spectrum from a precomputed split (with `order` signal vectors).
Pseudospectrum music_spectrum(const SubspaceSplit& split, const VaaGeometry& geometry, const RadioConfig& config,
                              const MusicConfig& mcfg, SteeringScale scale = {});

/// Single-point evaluation used by the refinement step.
double music_value(const SubspaceSplit& split, const VaaGeometry& geometry, const RadioConfig& config,
                   int subband_length, double doa_rad, double toa_s, SteeringScale scale = {});

struct Estimate {
    double doa_rad = 0.0;
    double toa_s = 0.0;
    double peak = 0.0;
};

struct EstimateSet {
    std::vector<Estimate> items;  ///< descending peak value
    bool degenerate = false;      ///< fewer strict local maxima than requested
};

/// The `count` largest strict local maxima (8-neighborhood) of the grid.
EstimateSet find_peaks(const Pseudospectrum& spectrum, int count);

/// Full estimator on a (recovered) one-way response.
EstimateSet estimate_one_way(const CfrMatrix& y, const VaaGeometry& geometry, const RadioConfig& config,
                             const MusicConfig& mcfg);

/// MUSIC run directly on the two-way response with doubled steering phases.
EstimateSet estimate_two_way_baseline(const CfrMatrix& two_way, const VaaGeometry& geometry,
                                      const RadioConfig& config, const MusicConfig& mcfg);

}  // namespace blevaa
