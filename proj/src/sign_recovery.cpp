#include "blevaa/sign_recovery.hpp"

#include <cmath>

#include "blevaa/twoway_cfr.hpp"

namespace blevaa {

namespace {

void require_prob_shape(const SignProbabilities& probs) {
    if (probs.row.rows() != probs.col.rows() || probs.row.cols() != probs.col.cols())
        throw DimensionError("row and column probability matrices differ in shape");
    if (probs.row.size() == 0) throw DimensionError("empty probability matrices");
}

// Greedy walk: each element takes the sign that keeps it within a quarter turn of the
// previously corrected element. Returns signs relative to element 0.
std::vector<int> continuity_walk(const Eigen::VectorXcd& values) {
    std::vector<int> rel(static_cast<std::size_t>(values.size()), 1);
    cdouble prev = values(0);
    for (Eigen::Index k = 1; k < values.size(); ++k) {
        const double jump = std::abs(std::arg(values(k) * std::conj(prev)));
        // prev is already corrected, so s is the sign relative to element 0
        const int s = jump <= 0.5 * kPi ? 1 : -1;
        rel[static_cast<std::size_t>(k)] = s;
        const cdouble corrected = static_cast<double>(s) * values(k);
        // A zero sample carries no phase; keep the last usable reference.
        if (std::abs(corrected) > 0.0) prev = corrected;
    }
    return rel;
}

double hard(int sign) { return sign > 0 ? kHardDecisionHigh : kHardDecisionLow; }

}  // namespace

LabelMatrices make_labels(const SignMatrix& signs) {
    const Eigen::MatrixXi& s = signs.values();
    LabelMatrices out{Eigen::MatrixXi(s.rows(), s.cols()), Eigen::MatrixXi(s.rows(), s.cols())};
    for (Eigen::Index m = 0; m < s.cols(); ++m) {
        for (Eigen::Index n = 0; n < s.rows(); ++n) {
            out.q(n, m) = s(n, m) == s(n, 0) ? 1 : 0;
            out.p(n, m) = s(n, m) == s(0, m) ? 1 : 0;
        }
    }
    return out;
}

// Column 0 of the row probabilities and row 0 of the column probabilities are self-references
// (their labels are 1 by definition) and are treated as +1 regardless of predictor output.
std::vector<int> vote_first_column(const SignProbabilities& probs) {
    require_prob_shape(probs);
    const Eigen::Index rows = probs.row.rows();
    const Eigen::Index cols = probs.row.cols();
    std::vector<int> first(static_cast<std::size_t>(rows), 1);
    for (Eigen::Index n = 1; n < rows; ++n) {
        int tally = 0;
        for (Eigen::Index m = 0; m < cols; ++m) {
            const int ref_row = m == 0 ? 1 : decide_sign(probs.row(0, m));
            const int this_row = m == 0 ? 1 : decide_sign(probs.row(n, m));
            tally += ref_row * decide_sign(probs.col(n, m)) * this_row;
        }
        first[static_cast<std::size_t>(n)] = tally >= 0 ? 1 : -1;
    }
    return first;
}

SignMatrix reconstruct_sign_matrix(const SignProbabilities& probs, const std::vector<int>& first_column) {
    require_prob_shape(probs);
    if (static_cast<Eigen::Index>(first_column.size()) != probs.row.rows())
        throw DimensionError("first-column length does not match the number of rows");
    if (first_column[0] != 1) throw std::invalid_argument("first-column reference sign must be +1");
    Eigen::MatrixXi s(probs.row.rows(), probs.row.cols());
    for (Eigen::Index n = 0; n < s.rows(); ++n) {
        const int ref = first_column[static_cast<std::size_t>(n)];
        s(n, 0) = ref;
        for (Eigen::Index m = 1; m < s.cols(); ++m) s(n, m) = decide_sign(probs.row(n, m)) * ref;
    }
    return SignMatrix(std::move(s));
}

SignMatrix resolve_signs(const SignProbabilities& probs) {
    return reconstruct_sign_matrix(probs, vote_first_column(probs));
}

CfrMatrix recover_one_way(const CfrMatrix& two_way_sqrt, const SignMatrix& signs) {
    if (two_way_sqrt.rows() != signs.rows() || two_way_sqrt.cols() != signs.cols())
        throw DimensionError("sign matrix shape does not match the CFR");
    return two_way_sqrt.cwiseProduct(signs.values().cast<double>().cast<cdouble>());
}

Eigen::MatrixXd continuity_predictor(const CfrMatrix& two_way, SliceAxis axis) {
    const CfrMatrix root = half_phase_sqrt(two_way);
    Eigen::MatrixXd out(root.rows(), root.cols());
    if (axis == SliceAxis::row) {
        for (Eigen::Index n = 0; n < root.rows(); ++n) {
            const auto rel = continuity_walk(root.row(n).transpose());
            for (Eigen::Index m = 0; m < root.cols(); ++m) out(n, m) = hard(rel[static_cast<std::size_t>(m)]);
        }
    } else {
        for (Eigen::Index m = 0; m < root.cols(); ++m) {
            const auto rel = continuity_walk(root.col(m));
            for (Eigen::Index n = 0; n < root.rows(); ++n) out(n, m) = hard(rel[static_cast<std::size_t>(n)]);
        }
    }
    return out;
}

SignProbabilities continuity_probabilities(const CfrMatrix& two_way) {
    return {continuity_predictor(two_way, SliceAxis::row), continuity_predictor(two_way, SliceAxis::column)};
}

SignProbabilities oracle_predictor(const SignMatrix& signs, double flip_rate, std::mt19937_64& rng) {
    if (!(flip_rate >= 0.0 && flip_rate < 0.5)) throw std::invalid_argument("flip_rate must lie in [0, 0.5)");
    const LabelMatrices labels = make_labels(signs);
    std::bernoulli_distribution flip(flip_rate);
    SignProbabilities out{Eigen::MatrixXd(signs.rows(), signs.cols()), Eigen::MatrixXd(signs.rows(), signs.cols())};
    // Row-major draw order: row labels then column labels per element.
    for (Eigen::Index n = 0; n < signs.rows(); ++n) {
        for (Eigen::Index m = 0; m < signs.cols(); ++m) {
            int q = labels.q(n, m);
            int p = labels.p(n, m);
            if (m != 0 && flip_rate > 0.0 && flip(rng)) q = 1 - q;
            if (n != 0 && flip_rate > 0.0 && flip(rng)) p = 1 - p;
            out.row(n, m) = q ? kHardDecisionHigh : kHardDecisionLow;
            out.col(n, m) = p ? kHardDecisionHigh : kHardDecisionLow;
        }
    }
    return out;
}

double sign_accuracy(const SignMatrix& estimate, const SignMatrix& truth) {
    if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols())
        throw DimensionError("sign matrices differ in shape");
    const Eigen::MatrixXi a = estimate.normalized().values();
    const Eigen::MatrixXi b = truth.normalized().values();
    return static_cast<double>((a.array() == b.array()).count()) / static_cast<double>(a.size());
}

}  // namespace blevaa
