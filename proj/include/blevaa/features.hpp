#pragma once

#include "blevaa/predictor.hpp"
#include "blevaa/sign_recovery.hpp"
#include "blevaa/types.hpp"

namespace blevaa {

/// Channel layout of predictor inputs.
///
/// Row slices (length M):     cos h, sin h, |y| / max|y|, cos 2h, sin 2h
/// Column slices (length N):  cos h, sin h, |y| / max|y|, frac(d / lambda), phi / pi,
///                            cos 2h, sin 2h, x / (8 lambda), y / (8 lambda)
/// where h is the half-phase of the two-way entry (the phase of its principal square root)
/// and (x, y) is the element position.
inline constexpr int kRowFeatureChannels = 5;
inline constexpr int kColumnFeatureChannels = 9;

int feature_channels(SliceAxis axis);

/// Features for row `index` (axis = row) or column `index` (axis = column) of a two-way CFR.
/// Throws DegenerateInputError when the slice is identically zero.
Eigen::MatrixXd extract_features(const CfrMatrix& two_way, const VaaGeometry& geometry, const RadioConfig& config,
                                 SliceAxis axis, Eigen::Index index);

/// Runs the row model over every row and the column model over every column of a two-way CFR.
/// Throws DimensionError when a model's input channels do not match its axis.
SignProbabilities learned_probabilities(const CfrMatrix& two_way, const VaaGeometry& geometry,
                                        const RadioConfig& config, const PredictorModel& row_model,
                                        const PredictorModel& col_model);

}  // namespace blevaa
