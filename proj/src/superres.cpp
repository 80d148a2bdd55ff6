#include "blevaa/superres.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace blevaa {

std::vector<double> GridSpec::nodes() const {
    validate("grid");
    const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    std::vector<double> out(count);
    for (std::size_t k = 0; k < count; ++k) out[k] = start + static_cast<double>(k) * step;
    return out;
}

void GridSpec::validate(const char* name) const {
    if (!std::isfinite(start) || !std::isfinite(stop) || !std::isfinite(step) || !(step > 0.0) || stop < start) {
        std::ostringstream os;
        os << name << " must have finite bounds, stop >= start and a positive step";
        throw std::invalid_argument(os.str());
    }
}

void MusicConfig::validate(const RadioConfig& radio) const {
    if (subband_length < 1 || subband_length > radio.num_subcarriers)
        throw std::invalid_argument("subband_length must lie in [1, num_subcarriers]");
    if (model_order < 1 || model_order >= radio.num_positions * subband_length)
        throw std::invalid_argument("model_order must lie in [1, N * subband_length)");
    doa_grid.validate("doa grid");
    toa_grid.validate("toa grid");
}

Eigen::MatrixXcd spatial_covariance(const CfrMatrix& y) {
    if (y.size() == 0) throw DimensionError("empty CFR");
    Eigen::MatrixXcd r = y * y.adjoint();
    r /= static_cast<double>(y.cols());
    return r;
}

Eigen::MatrixXcd smoothed_joint_covariance(const CfrMatrix& y, int subband_length, bool forward_backward) {
    const Eigen::Index n_pos = y.rows();
    const Eigen::Index n_sub = y.cols();
    if (subband_length < 1 || subband_length > n_sub) throw std::invalid_argument("subband_length out of range");
    const Eigen::Index dim = n_pos * subband_length;
    const Eigen::Index windows = n_sub - subband_length + 1;
    // Column k holds the vectorized window starting at subcarrier k; y is column-major so the
    // window is a contiguous slice of its storage.
    Eigen::MatrixXcd snapshots(dim, windows);
    for (Eigen::Index k = 0; k < windows; ++k)
        snapshots.col(k) = Eigen::Map<const Eigen::VectorXcd>(y.data() + k * n_pos, dim);
    Eigen::MatrixXcd r = snapshots * snapshots.adjoint();
    r /= static_cast<double>(windows);
    if (forward_backward) {
        const Eigen::MatrixXcd flipped = r.conjugate().reverse();
        r = 0.5 * (r + flipped);
    }
    return r;
}

SubspaceSplit split_subspace(const Eigen::MatrixXcd& cov, int order) {
    if (cov.rows() != cov.cols() || cov.rows() == 0) throw DimensionError("covariance must be square and non-empty");
    if (order < 0 || order > cov.rows()) throw std::invalid_argument("subspace order out of range");
    if (!cov.allFinite()) throw std::invalid_argument("covariance contains non-finite entries");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(cov);
    if (solver.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");
    const Eigen::Index dim = cov.rows();
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(dim));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    const Eigen::VectorXd& values = solver.eigenvalues();
    std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) { return values(a) > values(b); });

    SubspaceSplit out;
    out.eigenvalues.resize(dim);
    out.signal.resize(dim, order);
    out.noise.resize(dim, dim - order);
    for (Eigen::Index k = 0; k < dim; ++k) {
        const Eigen::Index src = idx[static_cast<std::size_t>(k)];
        out.eigenvalues(k) = values(src);
        if (k < order) out.signal.col(k) = solver.eigenvectors().col(src);
        else out.noise.col(k - order) = solver.eigenvectors().col(src);
    }
    return out;
}

namespace {

Eigen::VectorXcd scaled_spatial(const VaaGeometry& geometry, const RadioConfig& config, double doa_rad,
                                double factor) {
    const Eigen::Index n_pos = config.num_positions;
    const double k = factor * 2.0 * kPi / config.carrier_wavelength_m;
    Eigen::VectorXcd a(n_pos);
    for (Eigen::Index n = 0; n < n_pos; ++n) {
        const auto i = static_cast<std::size_t>(n);
        a(n) = std::polar(1.0, k * geometry.displacement_m[i] * std::cos(doa_rad - geometry.direction_rad[i]));
    }
    return a;
}

// Conjugated sub-band frequency steering, i.e. the row factor a_F^H of the data model.
Eigen::VectorXcd conj_frequency(const RadioConfig& config, int length, double toa_s, double factor) {
    Eigen::VectorXcd a(length);
    for (int j = 0; j < length; ++j)
        a(j) = std::polar(1.0, -2.0 * kPi * j * config.subcarrier_spacing_hz * factor * toa_s);
    return a;
}

double floor_denominator(double den, double norm2) { return std::max(den, norm2 * 1e-15); }

void check_dims(const SubspaceSplit& split, const VaaGeometry& geometry, const RadioConfig& config,
                int subband_length) {
    config.validate();
    geometry.validate(config);
    const Eigen::Index dim = static_cast<Eigen::Index>(config.num_positions) * subband_length;
    if (split.signal.rows() != dim) {
        std::ostringstream os;
        os << "covariance dimension " << split.signal.rows() << " does not match N * subband_length = " << dim;
        throw DimensionError(os.str());
    }
}

}  // namespace

Eigen::VectorXcd joint_steering(const VaaGeometry& geometry, const RadioConfig& config, int subband_length,
                                double doa_rad, double toa_s, SteeringScale scale) {
    config.validate();
    geometry.validate(config);
    const Eigen::VectorXcd a_s = scaled_spatial(geometry, config, doa_rad, scale.factor);
    const Eigen::VectorXcd a_f = conj_frequency(config, subband_length, toa_s, scale.factor);
    Eigen::VectorXcd a(a_s.size() * subband_length);
    for (int j = 0; j < subband_length; ++j) a.segment(j * a_s.size(), a_s.size()) = a_s * a_f(j);
    return a;
}

double music_value(const SubspaceSplit& split, const VaaGeometry& geometry, const RadioConfig& config,
                   int subband_length, double doa_rad, double toa_s, SteeringScale scale) {
    check_dims(split, geometry, config, subband_length);
    const Eigen::VectorXcd a = joint_steering(geometry, config, subband_length, doa_rad, toa_s, scale);
    const double norm2 = a.squaredNorm();
    const double captured = (split.signal.adjoint() * a).squaredNorm();
    return 1.0 / floor_denominator(norm2 - captured, norm2);
}

Pseudospectrum music_spectrum(const SubspaceSplit& split, const VaaGeometry& geometry, const RadioConfig& config,
                              const MusicConfig& mcfg, SteeringScale scale) {
    mcfg.validate(config);
    check_dims(split, geometry, config, mcfg.subband_length);
    Pseudospectrum out;
    out.doa_rad = mcfg.doa_grid.nodes();
    out.toa_s = mcfg.toa_grid.nodes();
    const auto n_doa = static_cast<Eigen::Index>(out.doa_rad.size());
    const auto n_toa = static_cast<Eigen::Index>(out.toa_s.size());
    const Eigen::Index n_pos = config.num_positions;
    const int ms = mcfg.subband_length;

    Eigen::MatrixXcd spatial(n_pos, n_doa);
    for (Eigen::Index i = 0; i < n_doa; ++i)
        spatial.col(i) = scaled_spatial(geometry, config, out.doa_rad[static_cast<std::size_t>(i)], scale.factor);
    Eigen::MatrixXcd freq(ms, n_toa);
    for (Eigen::Index t = 0; t < n_toa; ++t)
        freq.col(t) = conj_frequency(config, ms, out.toa_s[static_cast<std::size_t>(t)], scale.factor);

    // The steering vector is a Kronecker product, so each signal eigenvector e_k (reshaped to
    // N x M_s as S_k) contributes e_k^H a = (S_k^H a_s)^T a_f.
    Eigen::MatrixXd captured = Eigen::MatrixXd::Zero(n_doa, n_toa);
    for (Eigen::Index k = 0; k < split.signal.cols(); ++k) {
        const Eigen::Map<const Eigen::MatrixXcd> block(split.signal.col(k).data(), n_pos, ms);
        const Eigen::MatrixXcd proj = (block.adjoint() * spatial).transpose() * freq;
        captured += proj.cwiseAbs2();
    }
    const double norm2 = static_cast<double>(n_pos * ms);
    out.power.resize(n_doa, n_toa);
    for (Eigen::Index t = 0; t < n_toa; ++t)
        for (Eigen::Index i = 0; i < n_doa; ++i)
            out.power(i, t) = 1.0 / floor_denominator(norm2 - captured(i, t), norm2);
    return out;
}

Pseudospectrum music_spectrum(const Eigen::MatrixXcd& cov, const VaaGeometry& geometry, const RadioConfig& config,
                              const MusicConfig& mcfg, SteeringScale scale) {
    mcfg.validate(config);
    const Eigen::Index dim = static_cast<Eigen::Index>(config.num_positions) * mcfg.subband_length;
    if (cov.rows() != dim || cov.cols() != dim) throw DimensionError("covariance dimension must equal N * subband_length");
    return music_spectrum(split_subspace(cov, mcfg.model_order), geometry, config, mcfg, scale);
}

EstimateSet find_peaks(const Pseudospectrum& spectrum, int count) {
    const Eigen::MatrixXd& p = spectrum.power;
    if (p.size() == 0) throw std::invalid_argument("empty pseudospectrum");
    if (count < 1) throw std::invalid_argument("peak count must be positive");
    struct Node {
        Eigen::Index i, t;
        double value;
    };
    std::vector<Node> maxima;
    for (Eigen::Index t = 0; t < p.cols(); ++t) {
        for (Eigen::Index i = 0; i < p.rows(); ++i) {
            const double v = p(i, t);
            bool strict = true;
            for (Eigen::Index di = -1; di <= 1 && strict; ++di) {
                for (Eigen::Index dt = -1; dt <= 1; ++dt) {
                    if (di == 0 && dt == 0) continue;
                    const Eigen::Index ii = i + di, tt = t + dt;
                    if (ii < 0 || tt < 0 || ii >= p.rows() || tt >= p.cols()) continue;
                    if (!(v > p(ii, tt))) {
                        strict = false;
                        break;
                    }
                }
            }
            if (strict) maxima.push_back({i, t, v});
        }
    }
    const auto by_value = [](const Node& a, const Node& b) { return a.value > b.value; };
    std::stable_sort(maxima.begin(), maxima.end(), by_value);

    EstimateSet out;
    const auto want = static_cast<std::size_t>(count);
    if (maxima.size() > want) maxima.resize(want);
    if (maxima.size() < want) {
        out.degenerate = true;
        std::vector<Node> rest;
        rest.reserve(static_cast<std::size_t>(p.size()));
        for (Eigen::Index t = 0; t < p.cols(); ++t)
            for (Eigen::Index i = 0; i < p.rows(); ++i) {
                const bool taken = std::any_of(maxima.begin(), maxima.end(),
                                               [&](const Node& n) { return n.i == i && n.t == t; });
                if (!taken) rest.push_back({i, t, p(i, t)});
            }
        std::stable_sort(rest.begin(), rest.end(), by_value);
        for (std::size_t k = 0; maxima.size() < want && k < rest.size(); ++k) maxima.push_back(rest[k]);
    }
    for (const auto& n : maxima)
        out.items.push_back({spectrum.doa_rad[static_cast<std::size_t>(n.i)], spectrum.toa_s[static_cast<std::size_t>(n.t)],
                             n.value});
    return out;
}

namespace {

// Compass search on the pseudospectrum within one grid cell of the starting node.
Estimate refine_peak(const SubspaceSplit& split, const VaaGeometry& geometry, const RadioConfig& config,
                     const MusicConfig& mcfg, SteeringScale scale, Estimate start) {
    const double sd = mcfg.doa_grid.step;
    const double st = mcfg.toa_grid.step;
    const double lo_d = std::max(mcfg.doa_grid.start, start.doa_rad - sd);
    const double hi_d = std::min(mcfg.doa_grid.stop, start.doa_rad + sd);
    const double lo_t = std::max(mcfg.toa_grid.start, start.toa_s - st);
    const double hi_t = std::min(mcfg.toa_grid.stop, start.toa_s + st);
    auto eval = [&](double d, double t) {
        return music_value(split, geometry, config, mcfg.subband_length, d, t, scale);
    };
    Estimate best = start;
    best.peak = eval(best.doa_rad, best.toa_s);
    double h = 0.5;
    while (h > 1e-4) {
        bool moved = false;
        for (int di = -1; di <= 1; ++di) {
            for (int dt = -1; dt <= 1; ++dt) {
                if (di == 0 && dt == 0) continue;
                const double d = std::clamp(best.doa_rad + di * h * sd, lo_d, hi_d);
                const double t = std::clamp(best.toa_s + dt * h * st, lo_t, hi_t);
                const double v = eval(d, t);
                if (v > best.peak) {
                    best = {d, t, v};
                    moved = true;
                }
            }
        }
        if (!moved) h *= 0.5;
    }
    return best;
}

EstimateSet run_music(const CfrMatrix& y, const VaaGeometry& geometry, const RadioConfig& config,
                      const MusicConfig& mcfg, int subspace_order, SteeringScale scale) {
    mcfg.validate(config);
    if (y.rows() != config.num_positions || y.cols() != config.num_subcarriers)
        throw DimensionError("CFR shape does not match the radio config");
    const Eigen::MatrixXcd cov = smoothed_joint_covariance(y, mcfg.subband_length, mcfg.forward_backward);
    const SubspaceSplit split = split_subspace(cov, subspace_order);
    EstimateSet est = find_peaks(music_spectrum(split, geometry, config, mcfg, scale), mcfg.model_order);
    if (mcfg.refine) {
        for (auto& e : est.items) e = refine_peak(split, geometry, config, mcfg, scale, e);
        std::stable_sort(est.items.begin(), est.items.end(),
                         [](const Estimate& a, const Estimate& b) { return a.peak > b.peak; });
    }
    return est;
}

}  // namespace

EstimateSet estimate_one_way(const CfrMatrix& y, const VaaGeometry& geometry, const RadioConfig& config,
                             const MusicConfig& mcfg) {
    return run_music(y, geometry, config, mcfg, mcfg.model_order, {});
}

EstimateSet estimate_two_way_baseline(const CfrMatrix& two_way, const VaaGeometry& geometry,
                                      const RadioConfig& config, const MusicConfig& mcfg) {
    const int l = mcfg.model_order;
    const int order = std::min(l * (l + 1) / 2, config.num_positions * mcfg.subband_length - 1);
    return run_music(two_way, geometry, config, mcfg, order, SteeringScale{2.0});
}

}  // namespace blevaa
