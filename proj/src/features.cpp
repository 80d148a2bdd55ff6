#include "blevaa/features.hpp"

#include <cmath>
#include <sstream>

namespace blevaa {

int feature_channels(SliceAxis axis) {
    return axis == SliceAxis::row ? kRowFeatureChannels : kColumnFeatureChannels;
}

Eigen::MatrixXd extract_features(const CfrMatrix& two_way, const VaaGeometry& geometry, const RadioConfig& config,
                                 SliceAxis axis, Eigen::Index index) {
    const bool row = axis == SliceAxis::row;
    const Eigen::Index limit = row ? two_way.rows() : two_way.cols();
    if (index < 0 || index >= limit) {
        std::ostringstream os;
        os << (row ? "row" : "column") << " index " << index << " out of range [0, " << limit << ")";
        throw std::out_of_range(os.str());
    }
    const Eigen::VectorXcd slice = row ? Eigen::VectorXcd(two_way.row(index).transpose())
                                       : Eigen::VectorXcd(two_way.col(index));
    const double peak = slice.cwiseAbs().maxCoeff();
    if (!(peak > 0.0)) throw DegenerateInputError("cannot extract phase features from an all-zero slice");

    const Eigen::Index len = slice.size();
    Eigen::MatrixXd f(feature_channels(axis), len);
    for (Eigen::Index k = 0; k < len; ++k) {
        double two_phase = std::arg(slice(k));
        if (two_phase <= -kPi) two_phase = kPi;
        const double h = 0.5 * two_phase;
        f(0, k) = std::cos(h);
        f(1, k) = std::sin(h);
        f(2, k) = std::abs(slice(k)) / peak;
    }
    if (row) {
        for (Eigen::Index k = 0; k < len; ++k) {
            f(3, k) = 2.0 * f(0, k) * f(0, k) - 1.0;
            f(4, k) = 2.0 * f(0, k) * f(1, k);
        }
        return f;
    }
    config.validate();
    geometry.validate(config);
    if (len != config.num_positions) throw DimensionError("column length does not match the number of positions");
    const double lambda = config.carrier_wavelength_m;
    for (Eigen::Index k = 0; k < len; ++k) {
        const auto i = static_cast<std::size_t>(k);
        const double d = geometry.displacement_m[i] / lambda;
        const double phi = geometry.direction_rad[i];
        f(3, k) = d - std::floor(d);
        f(4, k) = phi / kPi;
        f(5, k) = 2.0 * f(0, k) * f(0, k) - 1.0;
        f(6, k) = 2.0 * f(0, k) * f(1, k);
        f(7, k) = d * std::cos(phi) / 8.0;
        f(8, k) = d * std::sin(phi) / 8.0;
    }
    return f;
}

SignProbabilities learned_probabilities(const CfrMatrix& two_way, const VaaGeometry& geometry,
                                        const RadioConfig& config, const PredictorModel& row_model,
                                        const PredictorModel& col_model) {
    if (row_model.input_channels() != kRowFeatureChannels)
        throw DimensionError("row model expects " + std::to_string(row_model.input_channels()) + " channels");
    if (col_model.input_channels() != kColumnFeatureChannels)
        throw DimensionError("column model expects " + std::to_string(col_model.input_channels()) + " channels");

    auto run = [&](const PredictorModel& model, SliceAxis axis, Eigen::Index count) {
        std::vector<Eigen::MatrixXd> features;
        features.reserve(static_cast<std::size_t>(count));
        for (Eigen::Index i = 0; i < count; ++i) features.push_back(extract_features(two_way, geometry, config, axis, i));
        std::vector<const Eigen::MatrixXd*> batch;
        for (const auto& f : features) batch.push_back(&f);
        // one column of probabilities per slice
        return Eigen::MatrixXd(model.logits(batch).unaryExpr([](double z) { return 1.0 / (1.0 + std::exp(-z)); }));
    };

    SignProbabilities out;
    out.row = run(row_model, SliceAxis::row, two_way.rows()).transpose();
    out.col = run(col_model, SliceAxis::column, two_way.cols());
    return out;
}

}  // namespace blevaa
