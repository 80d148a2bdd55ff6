#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace blevaa {

using cdouble = std::complex<double>;

/// N x M complex channel response, positions along rows, subcarriers along columns.
using CfrMatrix = Eigen::MatrixXcd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSpeedOfLight = 299792458.0;

/// Thrown when two operands do not share the expected shape.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown when an input slice or entry is too close to zero to carry phase.
class DegenerateInputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RadioConfig {
    int num_positions = 16;
    int num_subcarriers = 80;
    double subcarrier_spacing_hz = 1e6;
    double carrier_wavelength_m = 0.125;

    void validate() const;
};

/// Virtual array element positions in polar form relative to element 0.
struct VaaGeometry {
    std::vector<double> displacement_m;
    std::vector<double> direction_rad;

    std::size_t size() const { return displacement_m.size(); }

    /// Checks the reference element and the half-wavelength step bound.
    void validate(const RadioConfig& config) const;

    /// Builds the polar description from Cartesian element positions (first at the origin).
    static VaaGeometry from_positions(const std::vector<double>& x_m, const std::vector<double>& y_m);
};

struct Path {
    double doa_rad = 0.0;
    double toa_s = 0.0;
    cdouble gain{1.0, 0.0};
};

using PathSet = std::vector<Path>;

void validate_paths(const PathSet& paths);

/// {+1,-1} matrix relating the principal square root of the two-way response to the one-way response.
class SignMatrix {
public:
    SignMatrix() = default;
    SignMatrix(Eigen::Index rows, Eigen::Index cols, int fill = 1);
    explicit SignMatrix(Eigen::MatrixXi values);

    Eigen::Index rows() const { return values_.rows(); }
    Eigen::Index cols() const { return values_.cols(); }

    int operator()(Eigen::Index n, Eigen::Index m) const { return values_(n, m); }
    void set(Eigen::Index n, Eigen::Index m, int sign);

    const Eigen::MatrixXi& values() const { return values_; }

    /// Multiplies every entry by the sign of entry (0, 0).
    SignMatrix normalized() const;

    bool operator==(const SignMatrix& other) const { return values_ == other.values_; }

private:
    Eigen::MatrixXi values_;
};

void require_same_shape(const CfrMatrix& a, const CfrMatrix& b, const char* what);

}  // namespace blevaa
