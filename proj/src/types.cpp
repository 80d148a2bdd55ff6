#include "blevaa/types.hpp"

#include <cmath>
#include <sstream>

namespace blevaa {

void RadioConfig::validate() const {
    if (num_positions < 2) throw std::invalid_argument("num_positions must be at least 2");
    if (num_subcarriers < 2) throw std::invalid_argument("num_subcarriers must be at least 2");
    if (!(subcarrier_spacing_hz > 0.0) || !std::isfinite(subcarrier_spacing_hz))
        throw std::invalid_argument("subcarrier_spacing_hz must be positive");
    if (!(carrier_wavelength_m > 0.0) || !std::isfinite(carrier_wavelength_m))
        throw std::invalid_argument("carrier_wavelength_m must be positive");
}

void VaaGeometry::validate(const RadioConfig& config) const {
    const auto n = static_cast<std::size_t>(config.num_positions);
    if (displacement_m.size() != n || direction_rad.size() != n) {
        std::ostringstream os;
        os << "geometry has " << displacement_m.size() << "/" << direction_rad.size()
           << " entries, radio config expects " << n;
        throw DimensionError(os.str());
    }
    if (displacement_m[0] != 0.0 || direction_rad[0] != 0.0)
        throw std::invalid_argument("reference element must have zero displacement and direction");
    // Small slack for positions that went through a Cartesian round trip.
    const double limit = 0.5 * config.carrier_wavelength_m * (1.0 + 1e-12);
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(displacement_m[i]) || !std::isfinite(direction_rad[i]))
            throw std::invalid_argument("geometry contains non-finite values");
        if (displacement_m[i] < 0.0) throw std::invalid_argument("displacements must be non-negative");
        if (i + 1 < n && std::abs(displacement_m[i + 1] - displacement_m[i]) > limit) {
            std::ostringstream os;
            os << "spatial Nyquist violated between elements " << i << " and " << i + 1;
            throw std::invalid_argument(os.str());
        }
    }
}

VaaGeometry VaaGeometry::from_positions(const std::vector<double>& x_m, const std::vector<double>& y_m) {
    if (x_m.size() != y_m.size() || x_m.empty()) throw DimensionError("position vectors must match and be non-empty");
    VaaGeometry g;
    g.displacement_m.resize(x_m.size());
    g.direction_rad.resize(x_m.size());
    for (std::size_t i = 0; i < x_m.size(); ++i) {
        const double dx = x_m[i] - x_m[0];
        const double dy = y_m[i] - y_m[0];
        g.displacement_m[i] = std::hypot(dx, dy);
        g.direction_rad[i] = i == 0 ? 0.0 : std::atan2(dy, dx);
    }
    return g;
}

void validate_paths(const PathSet& paths) {
    if (paths.empty()) throw std::invalid_argument("path set must contain at least one path");
    for (const auto& p : paths) {
        if (!std::isfinite(p.doa_rad) || !std::isfinite(p.toa_s) || !std::isfinite(p.gain.real()) ||
            !std::isfinite(p.gain.imag()))
            throw std::invalid_argument("path parameters must be finite");
        if (!(std::abs(p.gain) > 0.0)) throw std::invalid_argument("path amplitude must be positive");
        if (p.toa_s < 0.0) throw std::invalid_argument("path delay must be non-negative");
        if (p.doa_rad < 0.0 || p.doa_rad >= kPi) throw std::invalid_argument("path DoA must lie in [0, pi)");
    }
}

SignMatrix::SignMatrix(Eigen::Index rows, Eigen::Index cols, int fill) : values_(rows, cols) {
    if (fill != 1 && fill != -1) throw std::invalid_argument("sign entries must be +1 or -1");
    values_.setConstant(fill);
}

SignMatrix::SignMatrix(Eigen::MatrixXi values) : values_(std::move(values)) {
    for (Eigen::Index i = 0; i < values_.size(); ++i) {
        const int v = values_.data()[i];
        if (v != 1 && v != -1) throw std::invalid_argument("sign entries must be +1 or -1");
    }
}

void SignMatrix::set(Eigen::Index n, Eigen::Index m, int sign) {
    if (sign != 1 && sign != -1) throw std::invalid_argument("sign entries must be +1 or -1");
    values_(n, m) = sign;
}

SignMatrix SignMatrix::normalized() const {
    if (values_.size() == 0) return *this;
    SignMatrix out = *this;
    if (values_(0, 0) == -1) out.values_ = -values_;
    return out;
}

void require_same_shape(const CfrMatrix& a, const CfrMatrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        std::ostringstream os;
        os << what << ": shape " << a.rows() << "x" << a.cols() << " does not match " << b.rows() << "x" << b.cols();
        throw DimensionError(os.str());
    }
}

}  // namespace blevaa
