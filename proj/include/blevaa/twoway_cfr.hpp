#pragma once

#include <random>

#include "blevaa/types.hpp"

namespace blevaa {

/// Per-element LO phase offsets in radians.
struct LoPhaseMatrix {
    Eigen::MatrixXd phases;
};

enum class LinkDirection { reflector, initiator };

/// Noise placement when simulating both halves of a ranging exchange.
enum class NoiseMode {
    shared,        ///< one noise matrix inside Y, used by both directions
    per_direction  ///< independent noise added to each direction
};

LoPhaseMatrix random_lo_phases(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng);

/// Phi o Y for the reflector direction, conj(Phi) o Y for the initiator direction.
CfrMatrix apply_lo_offsets(const CfrMatrix& y, const LoPhaseMatrix& lo, LinkDirection direction);

/// Hadamard product of the two one-way responses.
CfrMatrix two_way_cfr(const CfrMatrix& reflector, const CfrMatrix& initiator);

/// Element-wise principal square root, phase taken in (-pi, pi] so -1 maps to +j.
CfrMatrix half_phase_sqrt(const CfrMatrix& two_way);

/// Sign matrix N with two_way_sqrt = y o N, normalized so N(0,0) = +1.
/// Throws DegenerateInputError when |y| < 1e-12 anywhere.
SignMatrix true_sign_matrix(const CfrMatrix& y, const CfrMatrix& two_way_sqrt);

struct TwoWayMeasurement {
    CfrMatrix reflector;
    CfrMatrix initiator;
    CfrMatrix two_way;
};

/// Runs both directions of an exchange over a noiseless response.
/// In shared mode `noise` is added once before the LO offsets; in per_direction mode a fresh
/// draw is added to each direction after them.
TwoWayMeasurement measure_two_way(const CfrMatrix& noiseless, const LoPhaseMatrix& lo, double noise_std,
                                  NoiseMode mode, std::mt19937_64& rng);

}  // namespace blevaa
