#pragma once

#include <random>
#include <vector>

#include "blevaa/types.hpp"

namespace blevaa {

/// Row-relative (q) and column-relative (p) agreement labels derived from a sign matrix.
struct LabelMatrices {
    Eigen::MatrixXi q;  ///< q(n,m) = 1 iff N(n,m) == N(n,0)
    Eigen::MatrixXi p;  ///< p(n,m) = 1 iff N(n,m) == N(0,m)
};

/// Per-element probabilities that an entry shares the sign of its row / column reference.
struct SignProbabilities {
    Eigen::MatrixXd row;
    Eigen::MatrixXd col;
};

enum class SliceAxis { row, column };

LabelMatrices make_labels(const SignMatrix& signs);

/// sign(x - 0.5) with the tie at 0.5 resolved to +1.
inline int decide_sign(double probability) { return probability >= 0.5 ? 1 : -1; }

/// First-column signs by majority vote over per-column three-factor candidates.
std::vector<int> vote_first_column(const SignProbabilities& probs);

/// Row-consistent sign matrix: N(n,m) = g(row(n,m)) * first_column[n].
SignMatrix reconstruct_sign_matrix(const SignProbabilities& probs, const std::vector<int>& first_column);

/// Vote + reconstruction in one call.
SignMatrix resolve_signs(const SignProbabilities& probs);

/// Element-wise product of the half-phase square root and a sign matrix.
CfrMatrix recover_one_way(const CfrMatrix& two_way_sqrt, const SignMatrix& signs);

/// Greedy phase-continuity walk along one axis of half_phase_sqrt(two_way); hard decisions are
/// reported as 0.99 / 0.01. Returns a full N x M matrix for the requested axis.
Eigen::MatrixXd continuity_predictor(const CfrMatrix& two_way, SliceAxis axis);

/// Both axes of the continuity baseline.
SignProbabilities continuity_probabilities(const CfrMatrix& two_way);

/// Label-derived probabilities with each entry independently flipped at `flip_rate`.
SignProbabilities oracle_predictor(const SignMatrix& signs, double flip_rate, std::mt19937_64& rng);

/// Fraction of entries where `estimate` equals `truth` (both normalized to N(0,0) = +1).
double sign_accuracy(const SignMatrix& estimate, const SignMatrix& truth);

inline constexpr double kHardDecisionHigh = 0.99;
inline constexpr double kHardDecisionLow = 0.01;

}  // namespace blevaa
