#include "blevaa/twoway_cfr.hpp"

#include <cmath>
#include <sstream>

#include "blevaa/signal_model.hpp"

namespace blevaa {

LoPhaseMatrix random_lo_phases(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
    LoPhaseMatrix lo{Eigen::MatrixXd(rows, cols)};
    for (Eigen::Index i = 0; i < lo.phases.size(); ++i) lo.phases.data()[i] = phase(rng);
    return lo;
}

CfrMatrix apply_lo_offsets(const CfrMatrix& y, const LoPhaseMatrix& lo, LinkDirection direction) {
    if (lo.phases.rows() != y.rows() || lo.phases.cols() != y.cols())
        throw DimensionError("LO phase matrix shape does not match the CFR");
    const double sign = direction == LinkDirection::reflector ? 1.0 : -1.0;
    CfrMatrix out(y.rows(), y.cols());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double phi = lo.phases.data()[i];
        if (!std::isfinite(phi)) throw std::invalid_argument("LO phases must be finite");
        out.data()[i] = std::polar(1.0, sign * phi) * y.data()[i];
    }
    return out;
}

CfrMatrix two_way_cfr(const CfrMatrix& reflector, const CfrMatrix& initiator) {
    require_same_shape(reflector, initiator, "two_way_cfr");
    return reflector.cwiseProduct(initiator);
}

CfrMatrix half_phase_sqrt(const CfrMatrix& two_way) {
    CfrMatrix out(two_way.rows(), two_way.cols());
    for (Eigen::Index i = 0; i < two_way.size(); ++i) {
        const cdouble v = two_way.data()[i];
        double phi = std::arg(v);
        if (phi <= -kPi) phi = kPi;  // arg(-1 - 0j) = -pi lands on the closed end
        out.data()[i] = std::polar(std::sqrt(std::abs(v)), 0.5 * phi);
    }
    return out;
}

SignMatrix true_sign_matrix(const CfrMatrix& y, const CfrMatrix& two_way_sqrt) {
    require_same_shape(y, two_way_sqrt, "true_sign_matrix");
    Eigen::MatrixXi signs(y.rows(), y.cols());
    for (Eigen::Index m = 0; m < y.cols(); ++m) {
        for (Eigen::Index n = 0; n < y.rows(); ++n) {
            const cdouble den = y(n, m);
            if (std::abs(den) < 1e-12) {
                std::ostringstream os;
                os << "one-way entry (" << n << ", " << m << ") is too small to define a sign";
                throw DegenerateInputError(os.str());
            }
            // Re(a / b) has the sign of Re(a * conj(b)).
            signs(n, m) = std::real(two_way_sqrt(n, m) * std::conj(den)) < 0.0 ? -1 : 1;
        }
    }
    return SignMatrix(std::move(signs)).normalized();
}

TwoWayMeasurement measure_two_way(const CfrMatrix& noiseless, const LoPhaseMatrix& lo, double noise_std,
                                  NoiseMode mode, std::mt19937_64& rng) {
    TwoWayMeasurement out;
    if (mode == NoiseMode::shared) {
        CfrMatrix y = noiseless;
        if (noise_std > 0.0) y += complex_noise(y.rows(), y.cols(), noise_std, rng);
        out.reflector = apply_lo_offsets(y, lo, LinkDirection::reflector);
        out.initiator = apply_lo_offsets(y, lo, LinkDirection::initiator);
    } else {
        out.reflector = apply_lo_offsets(noiseless, lo, LinkDirection::reflector);
        out.initiator = apply_lo_offsets(noiseless, lo, LinkDirection::initiator);
        if (noise_std > 0.0) {
            out.reflector += complex_noise(noiseless.rows(), noiseless.cols(), noise_std, rng);
            out.initiator += complex_noise(noiseless.rows(), noiseless.cols(), noise_std, rng);
        }
    }
    out.two_way = two_way_cfr(out.reflector, out.initiator);
    return out;
}

}  // namespace blevaa
