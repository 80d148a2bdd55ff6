#include "blevaa/crlb.hpp"

#include <cmath>
#include <sstream>

#include "blevaa/signal_model.hpp"

namespace blevaa {

namespace {

std::string parameter_name(Eigen::Index index, int num_paths) {
    static const char* kinds[] = {"theta", "tau", "re_c", "im_c"};
    std::ostringstream os;
    os << kinds[index / num_paths] << "_" << (index % num_paths) + 1;
    return os.str();
}

}  // namespace

double CrlbBounds::doa_deg2(std::size_t path) const {
    const double to_deg = 180.0 / kPi;
    return doa_rad2.at(path) * to_deg * to_deg;
}

double CrlbBounds::toa_ns2(std::size_t path) const { return toa_s2.at(path) * 1e18; }

Eigen::MatrixXcd mean_jacobian(const VaaGeometry& geometry, const RadioConfig& config, const PathSet& paths) {
    config.validate();
    geometry.validate(config);
    validate_paths(paths);
    const Eigen::Index n_pos = config.num_positions;
    const Eigen::Index n_sub = config.num_subcarriers;
    const auto l = static_cast<Eigen::Index>(paths.size());
    const double k = 2.0 * kPi / config.carrier_wavelength_m;
    Eigen::MatrixXcd jac(n_pos * n_sub, 4 * l);
    const cdouble j(0.0, 1.0);

    for (Eigen::Index p = 0; p < l; ++p) {
        const Path& path = paths[static_cast<std::size_t>(p)];
        const Eigen::VectorXcd a_s = spatial_steering(geometry, config, path.doa_rad);
        const Eigen::VectorXcd a_f = frequency_steering(config, path.toa_s);
        Eigen::VectorXcd d_spatial(n_pos);
        for (Eigen::Index n = 0; n < n_pos; ++n) {
            const auto i = static_cast<std::size_t>(n);
            d_spatial(n) = -j * k * geometry.displacement_m[i] * std::sin(path.doa_rad - geometry.direction_rad[i]) * a_s(n);
        }
        for (Eigen::Index m = 0; m < n_sub; ++m) {
            const cdouble f = std::conj(a_f(m));
            const cdouble d_f = -j * 2.0 * kPi * static_cast<double>(m) * config.subcarrier_spacing_hz * f;
            for (Eigen::Index n = 0; n < n_pos; ++n) {
                const Eigen::Index row = n + n_pos * m;
                const cdouble outer = a_s(n) * f;
                jac(row, p) = path.gain * d_spatial(n) * f;
                jac(row, l + p) = path.gain * a_s(n) * d_f;
                jac(row, 2 * l + p) = outer;
                jac(row, 3 * l + p) = j * outer;
            }
        }
    }
    return jac;
}

FisherMatrix fisher_information(const Eigen::MatrixXcd& jacobian, double noise_std) {
    if (!(noise_std > 0.0) || !std::isfinite(noise_std))
        throw std::invalid_argument("Fisher information requires a positive noise standard deviation");
    if (jacobian.cols() % 4 != 0) throw DimensionError("Jacobian must have 4L columns");
    const Eigen::MatrixXd gram = (jacobian.adjoint() * jacobian).real();
    FisherMatrix fim;
    // Re(J^H J) is symmetric in exact arithmetic; remove rounding asymmetry.
    fim.gram = 0.5 * (gram + gram.transpose());
    fim.scale = 2.0 / (noise_std * noise_std);
    fim.num_paths = static_cast<int>(jacobian.cols() / 4);
    return fim;
}

CrlbBounds crlb_bounds(const FisherMatrix& fim) {
    const Eigen::MatrixXd& f = fim.gram;
    const int l = fim.num_paths;
    if (!(fim.scale > 0.0)) throw std::invalid_argument("Fisher scale must be positive");
    if (l < 1 || f.rows() != 4 * l || f.cols() != 4 * l) throw DimensionError("Fisher matrix must be 4L x 4L");
    const Eigen::Index dim = f.rows();

    // Jacobi scaling so the eigenvalue cutoff is meaningful across radians, seconds and gains.
    Eigen::VectorXd scale(dim);
    for (Eigen::Index i = 0; i < dim; ++i) scale(i) = f(i, i) > 0.0 ? 1.0 / std::sqrt(f(i, i)) : 0.0;
    const Eigen::MatrixXd normalized = scale.asDiagonal() * f * scale.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(normalized);
    if (solver.info() != Eigen::Success) throw std::runtime_error("Fisher eigendecomposition failed");
    const Eigen::VectorXd& values = solver.eigenvalues();
    const Eigen::MatrixXd& vectors = solver.eigenvectors();
    const double cutoff = 1e-12 * values.cwiseAbs().maxCoeff();

    Eigen::MatrixXd pinv = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::VectorXd null_weight = Eigen::VectorXd::Zero(dim);
    for (Eigen::Index k = 0; k < dim; ++k) {
        if (values(k) > cutoff) pinv += (1.0 / values(k)) * vectors.col(k) * vectors.col(k).transpose();
        else null_weight += vectors.col(k).cwiseAbs2();
    }

    CrlbBounds out;
    for (Eigen::Index i = 0; i < 2 * l; ++i) {
        if (scale(i) == 0.0 || null_weight(i) > 1e-8) {
            const std::string name = parameter_name(i, l);
            throw SingularFisherError(name, "Fisher matrix is singular in parameter " + name);
        }
        const double bound = pinv(i, i) * scale(i) * scale(i) / fim.scale;
        if (i < l) out.doa_rad2.push_back(bound);
        else out.toa_s2.push_back(bound);
    }
    return out;
}

CrlbBounds compute_crlb(const VaaGeometry& geometry, const RadioConfig& config, const PathSet& paths,
                        double noise_std) {
    return crlb_bounds(fisher_information(mean_jacobian(geometry, config, paths), noise_std));
}

}  // namespace blevaa
