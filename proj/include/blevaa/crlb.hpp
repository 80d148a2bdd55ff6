#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "blevaa/types.hpp"

namespace blevaa {

/// Raised when a requested parameter lies (numerically) in the null space of the Fisher matrix.
class SingularFisherError : public std::runtime_error {
public:
    SingularFisherError(const std::string& parameter, const std::string& message)
        : std::runtime_error(message), parameter_(parameter) {}
    const std::string& parameter() const { return parameter_; }

private:
    std::string parameter_;
};

/// Real 4L x 4L Fisher information over [theta_1..L, tau_1..L, Re c_1..L, Im c_1..L],
/// held as scale * gram so the noise level never touches the decomposed matrix.
struct FisherMatrix {
    Eigen::MatrixXd gram;  ///< Re(J^H J), symmetric
    double scale = 1.0;    ///< 2 / sigma^2
    int num_paths = 0;

    Eigen::MatrixXd values() const { return scale * gram; }
};

struct CrlbBounds {
    std::vector<double> doa_rad2;
    std::vector<double> toa_s2;

    double doa_deg2(std::size_t path) const;
    double toa_ns2(std::size_t path) const;
};

/// d vec(mean CFR) / d parameters, rows indexed n + N * m, columns in FisherMatrix order.
Eigen::MatrixXcd mean_jacobian(const VaaGeometry& geometry, const RadioConfig& config, const PathSet& paths);

/// (2 / sigma^2) Re(J^H J).
FisherMatrix fisher_information(const Eigen::MatrixXcd& jacobian, double noise_std);

/// Diagonal of the pseudo-inverse restricted to the DoA and ToA entries.
CrlbBounds crlb_bounds(const FisherMatrix& fim);

/// Convenience: Jacobian, Fisher matrix and bounds for one scenario.
CrlbBounds compute_crlb(const VaaGeometry& geometry, const RadioConfig& config, const PathSet& paths,
                        double noise_std);

}  // namespace blevaa
