#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace blevaa {

enum class PredictorRole { row, column };

std::string to_string(PredictorRole role);
PredictorRole predictor_role_from_string(const std::string& name);

/// 1D convolution with zero padding (kernel - 1) / 2.
/// Weight layout: out_channels x (in_channels * kernel), column index = in * kernel + tap.
struct ConvLayer {
    std::string name;
    int in_channels = 0;
    int out_channels = 0;
    int kernel = 3;
    int stride = 1;
    Eigen::MatrixXd weight;
    Eigen::VectorXd bias;

    Eigen::Index output_length(Eigen::Index input_length) const;
};

/// One training example: features are channels x length, targets are 0/1 per position.
struct Sample {
    Eigen::MatrixXd features;
    Eigen::VectorXd targets;
};

/// Encoder-decoder sign classifier.
///
/// Encoder level 0 is a stride-1 convolution, every further level halves the length with a
/// stride-2 convolution. The decoder upsamples by repetition, concatenates the matching encoder
/// output and applies a stride-1 convolution. A per-position linear head and a sigmoid give the
/// probability that each element shares the sign of the slice's first element.
class PredictorModel {
public:
    PredictorModel() = default;

    /// He-initialized model. `widths` lists the encoder channel counts, outermost first.
    static PredictorModel create(PredictorRole role, int input_channels, std::vector<int> widths,
                                 std::uint64_t seed, int kernel = 3);

    PredictorRole role() const { return role_; }
    int input_channels() const { return input_channels_; }
    const std::vector<int>& widths() const { return widths_; }
    int kernel() const { return kernel_; }
    std::uint64_t seed() const { return seed_; }
    void set_seed(std::uint64_t seed) { seed_ = seed; }

    std::vector<ConvLayer>& layers() { return layers_; }
    const std::vector<ConvLayer>& layers() const { return layers_; }
    std::size_t parameter_count() const;

    /// Sets every weight and bias to zero.
    void zero();

    /// Logits for a batch of equal-length inputs (channels x length each), one column per input.
    Eigen::MatrixXd logits(const std::vector<const Eigen::MatrixXd*>& batch) const;

    void save(const std::filesystem::path& path) const;
    static PredictorModel load(const std::filesystem::path& path);
    std::string to_json() const;
    static PredictorModel from_json(const std::string& text);

    static constexpr int kFormatVersion = 1;

private:
    PredictorRole role_ = PredictorRole::row;
    int input_channels_ = 0;
    int kernel_ = 3;
    std::vector<int> widths_;
    std::vector<ConvLayer> layers_;  // encoder levels, decoder levels (innermost first), head
    std::uint64_t seed_ = 0;
};

/// Per-position probabilities for one feature sequence (channels x length).
Eigen::VectorXd predict(const PredictorModel& model, const Eigen::MatrixXd& features);

/// Gradients with the same layout as the model's layers.
struct ModelGradients {
    std::vector<Eigen::MatrixXd> weight;
    std::vector<Eigen::VectorXd> bias;
};

/// Mean binary cross-entropy over every position of the batch, optionally with its gradient.
double loss_and_gradient(const PredictorModel& model, const std::vector<const Sample*>& batch,
                         ModelGradients* gradients);

struct TrainConfig {
    double learning_rate = 1e-3;
    int batch_size = 32;
    int epochs = 50;
    int patience = 5;
    std::uint64_t seed = 1;

    void validate() const;
};

struct TrainHistory {
    std::vector<double> train_loss;
    std::vector<double> validation_loss;
    std::vector<double> validation_accuracy;
    int best_epoch = -1;
};

struct TrainResult {
    PredictorModel model;  ///< weights from the epoch with the lowest validation loss
    TrainHistory history;
};

class TrainingDivergedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using EpochCallback = std::function<void(int epoch, double train_loss, double validation_loss, double accuracy)>;

/// Mini-batch Adam on the mean cross-entropy with early stopping on validation loss.
/// An empty validation set falls back to the training set for model selection.
TrainResult train(PredictorModel model, const std::vector<Sample>& training, const std::vector<Sample>& validation,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Mean loss and thresholded accuracy over a sample set (batched forward passes).
std::pair<double, double> evaluate(const PredictorModel& model, const std::vector<Sample>& samples);

}  // namespace blevaa
