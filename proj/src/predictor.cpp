#include "blevaa/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

namespace blevaa {

namespace {

using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// Activations for a batch are stored channels x (batch * length); sample b occupies the
// column range [b * length, (b + 1) * length).
Matrix im2col(const Matrix& x, Index batch, Index in_len, int kernel, int stride, Index out_len) {
    const Index channels = x.rows();
    const int pad = (kernel - 1) / 2;
    Matrix cols = Matrix::Zero(channels * kernel, batch * out_len);
    for (Index b = 0; b < batch; ++b) {
        for (Index t = 0; t < out_len; ++t) {
            const Index dst = b * out_len + t;
            for (int k = 0; k < kernel; ++k) {
                const Index src = t * stride + k - pad;
                if (src < 0 || src >= in_len) continue;
                const Index col = b * in_len + src;
                for (Index c = 0; c < channels; ++c) cols(c * kernel + k, dst) = x(c, col);
            }
        }
    }
    return cols;
}

Matrix col2im(const Matrix& cols, Index channels, Index batch, Index in_len, int kernel, int stride, Index out_len) {
    const int pad = (kernel - 1) / 2;
    Matrix x = Matrix::Zero(channels, batch * in_len);
    for (Index b = 0; b < batch; ++b) {
        for (Index t = 0; t < out_len; ++t) {
            const Index src_col = b * out_len + t;
            for (int k = 0; k < kernel; ++k) {
                const Index dst = t * stride + k - pad;
                if (dst < 0 || dst >= in_len) continue;
                const Index col = b * in_len + dst;
                for (Index c = 0; c < channels; ++c) x(c, col) += cols(c * kernel + k, src_col);
            }
        }
    }
    return x;
}

Matrix upsample(const Matrix& u, Index batch, Index u_len, Index out_len) {
    Matrix out(u.rows(), batch * out_len);
    for (Index b = 0; b < batch; ++b)
        for (Index t = 0; t < out_len; ++t) out.col(b * out_len + t) = u.col(b * u_len + std::min(t / 2, u_len - 1));
    return out;
}

Matrix upsample_backward(const Matrix& d_out, Index batch, Index u_len, Index out_len) {
    Matrix du = Matrix::Zero(d_out.rows(), batch * u_len);
    for (Index b = 0; b < batch; ++b)
        for (Index t = 0; t < out_len; ++t) du.col(b * u_len + std::min(t / 2, u_len - 1)) += d_out.col(b * out_len + t);
    return du;
}

struct Tape {
    std::vector<Matrix> cols;  // im2col input per layer
    std::vector<Matrix> out;   // post-activation output per layer (logits for the head)
    std::vector<Index> enc_len;
    std::vector<Index> in_len;
    Index batch = 0;
};

Matrix stack_batch(const std::vector<const Matrix*>& batch, int channels, Index& length) {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    length = batch.front()->cols();
    Matrix x(channels, static_cast<Index>(batch.size()) * length);
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const Matrix& f = *batch[b];
        if (f.rows() != channels) {
            std::ostringstream os;
            os << "feature channel count " << f.rows() << " does not match model input channels " << channels;
            throw std::invalid_argument(os.str());
        }
        if (f.cols() != length) throw std::invalid_argument("all inputs in a batch must have the same length");
        x.middleCols(static_cast<Index>(b) * length, length) = f;
    }
    return x;
}

Matrix run_conv(const ConvLayer& layer, const Matrix& x, Index batch, Index in_len, bool relu, Tape* tape) {
    const Index out_len = layer.output_length(in_len);
    Matrix cols = im2col(x, batch, in_len, layer.kernel, layer.stride, out_len);
    Matrix z = layer.weight * cols;
    z.colwise() += layer.bias;
    if (relu) z = z.cwiseMax(0.0);
    if (tape) {
        tape->cols.push_back(std::move(cols));
        tape->out.push_back(z);
        tape->in_len.push_back(in_len);
    }
    return z;
}

Matrix forward(const PredictorModel& model, const Matrix& x, Index batch, Index length, Tape* tape) {
    const auto& layers = model.layers();
    const auto levels = static_cast<Index>(model.widths().size());
    std::vector<Matrix> enc(static_cast<std::size_t>(levels));
    std::vector<Index> enc_len(static_cast<std::size_t>(levels));
    Matrix h = x;
    Index len = length;
    for (Index i = 0; i < levels; ++i) {
        const ConvLayer& layer = layers[static_cast<std::size_t>(i)];
        h = run_conv(layer, h, batch, len, true, tape);
        len = layer.output_length(len);
        enc[static_cast<std::size_t>(i)] = h;
        enc_len[static_cast<std::size_t>(i)] = len;
    }
    Matrix u = enc.back();
    Index u_len = enc_len.back();
    for (Index j = 0; j + 1 < levels; ++j) {
        const auto level = static_cast<std::size_t>(levels - 2 - j);
        const ConvLayer& layer = layers[static_cast<std::size_t>(levels + j)];
        const Matrix up = upsample(u, batch, u_len, enc_len[level]);
        Matrix cat(up.rows() + enc[level].rows(), up.cols());
        cat.topRows(up.rows()) = up;
        cat.bottomRows(enc[level].rows()) = enc[level];
        u = run_conv(layer, cat, batch, enc_len[level], true, tape);
        u_len = enc_len[level];
    }
    if (tape) {
        tape->enc_len = enc_len;
        tape->batch = batch;
    }
    return run_conv(layers.back(), u, batch, u_len, false, tape);
}

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
double sigmoid(double z) { return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

ModelGradients zero_gradients(const PredictorModel& model) {
    ModelGradients g;
    for (const auto& layer : model.layers()) {
        g.weight.push_back(Matrix::Zero(layer.weight.rows(), layer.weight.cols()));
        g.bias.push_back(Eigen::VectorXd::Zero(layer.bias.size()));
    }
    return g;
}

void backward(const PredictorModel& model, const Tape& tape, const Matrix& d_logits, ModelGradients& grad) {
    const auto& layers = model.layers();
    const auto levels = static_cast<Index>(model.widths().size());
    const Index batch = tape.batch;
    const auto head = layers.size() - 1;

    auto conv_backward = [&](std::size_t idx, const Matrix& dz) {
        grad.weight[idx].noalias() += dz * tape.cols[idx].transpose();
        grad.bias[idx] += dz.rowwise().sum();
        const Matrix d_cols = layers[idx].weight.transpose() * dz;
        return col2im(d_cols, layers[idx].in_channels, batch, tape.in_len[idx], layers[idx].kernel,
                      layers[idx].stride, layers[idx].output_length(tape.in_len[idx]));
    };
    auto relu_mask = [&](std::size_t idx, const Matrix& d_out) {
        return Matrix((tape.out[idx].array() > 0.0).select(d_out, 0.0));
    };

    std::vector<Matrix> d_enc(static_cast<std::size_t>(levels));
    for (Index i = 0; i < levels; ++i)
        d_enc[static_cast<std::size_t>(i)] = Matrix::Zero(tape.out[static_cast<std::size_t>(i)].rows(),
                                                          tape.out[static_cast<std::size_t>(i)].cols());

    Matrix du = conv_backward(head, d_logits);
    for (Index j = levels - 2; j >= 0; --j) {
        const auto level = static_cast<std::size_t>(levels - 2 - j);
        const auto idx = static_cast<std::size_t>(levels + j);
        const Matrix d_cat = conv_backward(idx, relu_mask(idx, du));
        const Index up_channels = d_cat.rows() - d_enc[level].rows();
        d_enc[level] += d_cat.bottomRows(d_enc[level].rows());
        const Index u_len = tape.enc_len[level + 1];
        du = upsample_backward(d_cat.topRows(up_channels), batch, u_len, tape.enc_len[level]);
    }
    d_enc.back() += du;
    for (Index i = levels - 1; i >= 0; --i) {
        const auto idx = static_cast<std::size_t>(i);
        const Matrix dx = conv_backward(idx, relu_mask(idx, d_enc[idx]));
        if (i > 0) d_enc[idx - 1] += dx;
    }
}

ConvLayer make_layer(std::string name, int in, int out, int kernel, int stride) {
    ConvLayer l;
    l.name = std::move(name);
    l.in_channels = in;
    l.out_channels = out;
    l.kernel = kernel;
    l.stride = stride;
    l.weight = Matrix::Zero(out, in * kernel);
    l.bias = Eigen::VectorXd::Zero(out);
    return l;
}

}  // namespace

std::string to_string(PredictorRole role) { return role == PredictorRole::row ? "row" : "col"; }

PredictorRole predictor_role_from_string(const std::string& name) {
    if (name == "row") return PredictorRole::row;
    if (name == "col" || name == "column") return PredictorRole::column;
    throw std::invalid_argument("unknown predictor role '" + name + "'");
}

Eigen::Index ConvLayer::output_length(Eigen::Index input_length) const {
    const int pad = (kernel - 1) / 2;
    return (input_length + 2 * pad - kernel) / stride + 1;
}

PredictorModel PredictorModel::create(PredictorRole role, int input_channels, std::vector<int> widths,
                                      std::uint64_t seed, int kernel) {
    if (input_channels < 1) throw std::invalid_argument("input_channels must be positive");
    if (widths.empty() || std::any_of(widths.begin(), widths.end(), [](int w) { return w < 1; }))
        throw std::invalid_argument("widths must be a non-empty list of positive channel counts");
    if (kernel < 1 || kernel % 2 == 0) throw std::invalid_argument("kernel must be odd and positive");
    PredictorModel model;
    model.role_ = role;
    model.input_channels_ = input_channels;
    model.kernel_ = kernel;
    model.widths_ = std::move(widths);
    model.seed_ = seed;
    const auto levels = model.widths_.size();
    int in = input_channels;
    for (std::size_t i = 0; i < levels; ++i) {
        model.layers_.push_back(make_layer("enc" + std::to_string(i), in, model.widths_[i], kernel, i == 0 ? 1 : 2));
        in = model.widths_[i];
    }
    for (std::size_t j = 0; j + 1 < levels; ++j) {
        const std::size_t level = levels - 2 - j;
        model.layers_.push_back(
            make_layer("dec" + std::to_string(level), in + model.widths_[level], model.widths_[level], kernel, 1));
        in = model.widths_[level];
    }
    model.layers_.push_back(make_layer("head", in, 1, 1, 1));

    std::mt19937_64 rng(seed);
    for (auto& layer : model.layers_) {
        std::normal_distribution<double> init(0.0, std::sqrt(2.0 / static_cast<double>(layer.weight.cols())));
        for (Index i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = init(rng);
    }
    return model;
}

std::size_t PredictorModel::parameter_count() const {
    std::size_t total = 0;
    for (const auto& l : layers_) total += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return total;
}

void PredictorModel::zero() {
    for (auto& l : layers_) {
        l.weight.setZero();
        l.bias.setZero();
    }
}

Eigen::MatrixXd PredictorModel::logits(const std::vector<const Eigen::MatrixXd*>& batch) const {
    if (layers_.empty()) throw std::logic_error("model has no layers");
    Index length = 0;
    const Matrix x = stack_batch(batch, input_channels_, length);
    const auto b = static_cast<Index>(batch.size());
    const Matrix flat = forward(*this, x, b, length, nullptr);
    return Eigen::Map<const Matrix>(flat.data(), length, b);
}

Eigen::VectorXd predict(const PredictorModel& model, const Eigen::MatrixXd& features) {
    const Matrix z = model.logits({&features});
    return z.col(0).unaryExpr([](double v) { return sigmoid(v); });
}

double loss_and_gradient(const PredictorModel& model, const std::vector<const Sample*>& batch,
                         ModelGradients* gradients) {
    std::vector<const Matrix*> inputs;
    inputs.reserve(batch.size());
    for (const auto* s : batch) inputs.push_back(&s->features);
    Index length = 0;
    const Matrix x = stack_batch(inputs, model.input_channels(), length);
    const auto b = static_cast<Index>(batch.size());
    Tape tape;
    const Matrix z = forward(model, x, b, length, gradients ? &tape : nullptr);
    const double count = static_cast<double>(b * length);
    double loss = 0.0;
    Matrix dz(1, b * length);
    for (Index s = 0; s < b; ++s) {
        const Eigen::VectorXd& t = batch[static_cast<std::size_t>(s)]->targets;
        if (t.size() != length) throw std::invalid_argument("target length does not match feature length");
        for (Index i = 0; i < length; ++i) {
            const double logit = z(0, s * length + i);
            loss += softplus(logit) - t(i) * logit;
            dz(0, s * length + i) = (sigmoid(logit) - t(i)) / count;
        }
    }
    if (gradients) {
        *gradients = zero_gradients(model);
        backward(model, tape, dz, *gradients);
    }
    return loss / count;
}

std::pair<double, double> evaluate(const PredictorModel& model, const std::vector<Sample>& samples) {
    if (samples.empty()) throw std::invalid_argument("cannot evaluate on an empty sample set");
    double loss = 0.0;
    double correct = 0.0;
    double count = 0.0;
    constexpr std::size_t chunk = 256;
    for (std::size_t start = 0; start < samples.size(); start += chunk) {
        const std::size_t stop = std::min(samples.size(), start + chunk);
        std::vector<const Matrix*> inputs;
        for (std::size_t i = start; i < stop; ++i) inputs.push_back(&samples[i].features);
        const Matrix z = model.logits(inputs);
        for (std::size_t i = start; i < stop; ++i) {
            const Eigen::VectorXd& t = samples[i].targets;
            for (Index k = 0; k < t.size(); ++k) {
                const double logit = z(k, static_cast<Index>(i - start));
                loss += softplus(logit) - t(k) * logit;
                correct += ((logit >= 0.0) == (t(k) > 0.5)) ? 1.0 : 0.0;
                count += 1.0;
            }
        }
    }
    return {loss / count, correct / count};
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be positive");
    if (epochs < 1) throw std::invalid_argument("epochs must be positive");
    if (patience < 1) throw std::invalid_argument("patience must be positive");
    if (seed == 0) throw std::invalid_argument("seed must be positive");
}

TrainResult train(PredictorModel model, const std::vector<Sample>& training, const std::vector<Sample>& validation,
                  const TrainConfig& config, const EpochCallback& on_epoch) {
    config.validate();
    if (training.empty()) throw std::invalid_argument("training set is empty");
    const std::vector<Sample>& selection = validation.empty() ? training : validation;

    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    ModelGradients m1 = zero_gradients(model);
    ModelGradients m2 = zero_gradients(model);
    std::mt19937_64 rng(config.seed);
    std::vector<std::size_t> order(training.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainResult result{model, {}};
    double best = std::numeric_limits<double>::infinity();
    int since_best = 0;
    long step = 0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            std::vector<const Sample*> batch;
            for (std::size_t i = start; i < stop; ++i) batch.push_back(&training[order[i]]);
            ModelGradients g;
            const double loss = loss_and_gradient(model, batch, &g);
            if (!std::isfinite(loss)) {
                std::ostringstream os;
                os << "training loss became non-finite at epoch " << epoch << ", batch starting at " << start;
                throw TrainingDivergedError(os.str());
            }
            epoch_loss += loss * static_cast<double>(batch.size());
            seen += batch.size();
            ++step;
            const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
            auto& layers = model.layers();
            for (std::size_t l = 0; l < layers.size(); ++l) {
                m1.weight[l] = beta1 * m1.weight[l] + (1.0 - beta1) * g.weight[l];
                m2.weight[l] = beta2 * m2.weight[l] + (1.0 - beta2) * g.weight[l].cwiseAbs2();
                layers[l].weight.array() -= config.learning_rate * (m1.weight[l].array() / c1) /
                                            ((m2.weight[l].array() / c2).sqrt() + eps);
                m1.bias[l] = beta1 * m1.bias[l] + (1.0 - beta1) * g.bias[l];
                m2.bias[l] = beta2 * m2.bias[l] + (1.0 - beta2) * g.bias[l].cwiseAbs2();
                layers[l].bias.array() -=
                    config.learning_rate * (m1.bias[l].array() / c1) / ((m2.bias[l].array() / c2).sqrt() + eps);
            }
        }
        const double train_loss = epoch_loss / static_cast<double>(seen);
        const auto [val_loss, val_acc] = evaluate(model, selection);
        result.history.train_loss.push_back(train_loss);
        result.history.validation_loss.push_back(val_loss);
        result.history.validation_accuracy.push_back(val_acc);
        if (on_epoch) on_epoch(epoch, train_loss, val_loss, val_acc);
        if (!std::isfinite(val_loss)) throw TrainingDivergedError("validation loss became non-finite");
        if (val_loss < best) {
            best = val_loss;
            since_best = 0;
            result.model = model;
            result.history.best_epoch = epoch;
        } else if (++since_best >= config.patience) {
            break;
        }
    }
    result.model.set_seed(config.seed);
    return result;
}

std::string PredictorModel::to_json() const {
    nlohmann::json j;
    j["format_version"] = kFormatVersion;
    j["role"] = to_string(role_);
    j["input_channels"] = input_channels_;
    j["kernel"] = kernel_;
    j["widths"] = widths_;
    j["seed"] = seed_;
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : layers_) {
        nlohmann::json e;
        e["name"] = l.name;
        e["in_channels"] = l.in_channels;
        e["out_channels"] = l.out_channels;
        e["kernel"] = l.kernel;
        e["stride"] = l.stride;
        e["shape"] = {l.weight.rows(), l.weight.cols()};
        std::vector<double> w;
        w.reserve(static_cast<std::size_t>(l.weight.size()));
        for (Index r = 0; r < l.weight.rows(); ++r)
            for (Index c = 0; c < l.weight.cols(); ++c) w.push_back(l.weight(r, c));
        e["weight"] = std::move(w);
        e["bias"] = std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size());
        layers.push_back(std::move(e));
    }
    j["layers"] = std::move(layers);
    return j.dump();
}

PredictorModel PredictorModel::from_json(const std::string& text) {
    const nlohmann::json j = nlohmann::json::parse(text);
    const int version = j.at("format_version").get<int>();
    if (version != kFormatVersion)
        throw std::runtime_error("unsupported model format version " + std::to_string(version));
    PredictorModel model = create(predictor_role_from_string(j.at("role").get<std::string>()),
                                  j.at("input_channels").get<int>(), j.at("widths").get<std::vector<int>>(),
                                  j.at("seed").get<std::uint64_t>(), j.at("kernel").get<int>());
    const auto& layers = j.at("layers");
    if (layers.size() != model.layers_.size()) throw std::runtime_error("model file layer count mismatch");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        ConvLayer& l = model.layers_[i];
        const auto& e = layers[i];
        const auto shape = e.at("shape").get<std::vector<Index>>();
        if (e.at("name").get<std::string>() != l.name || shape.size() != 2 || shape[0] != l.weight.rows() ||
            shape[1] != l.weight.cols() || e.at("stride").get<int>() != l.stride)
            throw std::runtime_error("model file layer '" + l.name + "' has an inconsistent shape");
        const auto w = e.at("weight").get<std::vector<double>>();
        const auto b = e.at("bias").get<std::vector<double>>();
        if (static_cast<Index>(w.size()) != l.weight.size() || static_cast<Index>(b.size()) != l.bias.size())
            throw std::runtime_error("model file layer '" + l.name + "' has the wrong number of values");
        for (Index r = 0; r < l.weight.rows(); ++r)
            for (Index c = 0; c < l.weight.cols(); ++c)
                l.weight(r, c) = w[static_cast<std::size_t>(r * l.weight.cols() + c)];
        l.bias = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Index>(b.size()));
    }
    return model;
}

void PredictorModel::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open model file for writing: " + path.string());
    out << to_json() << '\n';
    if (!out) throw std::runtime_error("failed writing model file: " + path.string());
}

PredictorModel PredictorModel::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return from_json(buf.str());
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("malformed model file " + path.string() + ": " + e.what());
    }
}

}  // namespace blevaa
