#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "blevaa/features.hpp"
#include "blevaa/predictor.hpp"
#include "blevaa/signal_model.hpp"
#include "blevaa/twoway_cfr.hpp"
#include "helpers.hpp"

using namespace blevaa;
using namespace testutil;

namespace {

using Seq = std::vector<std::vector<double>>;  // [channel][position]

Seq conv_ref(const ConvLayer& l, const Seq& x, bool relu) {
    const int len = static_cast<int>(x[0].size());
    const int pad = (l.kernel - 1) / 2;
    const int out_len = (len + 2 * pad - l.kernel) / l.stride + 1;
    Seq y(static_cast<std::size_t>(l.out_channels), std::vector<double>(static_cast<std::size_t>(out_len), 0.0));
    for (int o = 0; o < l.out_channels; ++o)
        for (int t = 0; t < out_len; ++t) {
            double acc = l.bias(o);
            for (int c = 0; c < l.in_channels; ++c)
                for (int k = 0; k < l.kernel; ++k) {
                    const int src = t * l.stride + k - pad;
                    if (src >= 0 && src < len) acc += l.weight(o, c * l.kernel + k) * x[c][static_cast<std::size_t>(src)];
                }
            y[o][static_cast<std::size_t>(t)] = relu ? std::max(acc, 0.0) : acc;
        }
    return y;
}

// Straight-line forward pass of the encoder-decoder, independent of the batched implementation.
std::vector<double> forward_ref(const PredictorModel& m, const Eigen::MatrixXd& f) {
    Seq x(static_cast<std::size_t>(f.rows()));
    for (Eigen::Index c = 0; c < f.rows(); ++c)
        for (Eigen::Index t = 0; t < f.cols(); ++t) x[c].push_back(f(c, t));
    const std::size_t levels = m.widths().size();
    std::vector<Seq> enc;
    Seq h = x;
    for (std::size_t i = 0; i < levels; ++i) enc.push_back(h = conv_ref(m.layers()[i], h, true));
    Seq u = enc.back();
    for (std::size_t j = 0; j + 1 < levels; ++j) {
        const Seq& skip = enc[levels - 2 - j];
        const std::size_t len = skip[0].size();
        Seq cat;
        for (const auto& ch : u) {
            std::vector<double> up(len);
            for (std::size_t t = 0; t < len; ++t) up[t] = ch[std::min(t / 2, ch.size() - 1)];
            cat.push_back(up);
        }
        for (const auto& ch : skip) cat.push_back(ch);
        u = conv_ref(m.layers()[levels + j], cat, true);
    }
    return conv_ref(m.layers().back(), u, false)[0];
}

std::vector<Sample> toy_samples(int count, int channels, int length, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::bernoulli_distribution b(0.5);
    std::vector<Sample> out;
    for (int i = 0; i < count; ++i) {
        Sample s;
        s.features = Eigen::MatrixXd::NullaryExpr(channels, length, [&] { return g(rng); });
        s.targets = Eigen::VectorXd::NullaryExpr(length, [&] { return b(rng) ? 1.0 : 0.0; });
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace

TEST_CASE("row features of a slice with zero half-phase") {
    RadioConfig radio = small_radio(2, 6);
    VaaGeometry g{{0.0, 0.03}, {0.0, 0.0}};
    const CfrMatrix two = CfrMatrix::Constant(2, 6, cdouble(2.0, 0.0));
    const Eigen::MatrixXd f = extract_features(two, g, radio, SliceAxis::row, 1);
    CHECK(f.rows() == kRowFeatureChannels);
    CHECK(f.cols() == 6);
    CHECK((f.row(0).array() == 1.0).all());
    CHECK((f.row(1).array() == 0.0).all());
    CHECK((f.row(2).array() == 1.0).all());
}

TEST_CASE("feature of a single entry") {
    RadioConfig radio = small_radio(2, 2);
    VaaGeometry g{{0.0, 0.03}, {0.0, 0.4}};
    CfrMatrix two(2, 2);
    two << std::polar(3.0, 2.2), std::polar(0.5, -1.0), std::polar(1.0, 0.3), std::polar(1.0, 0.3);
    const Eigen::MatrixXd f = extract_features(two, g, radio, SliceAxis::row, 0);
    CHECK(f(0, 0) == doctest::Approx(std::cos(1.1)));
    CHECK(f(1, 0) == doctest::Approx(std::sin(1.1)));
    CHECK(f(2, 0) == doctest::Approx(1.0));
    CHECK(f(2, 1) == doctest::Approx(0.5 / 3.0));

    const Eigen::MatrixXd c = extract_features(two, g, radio, SliceAxis::column, 1);
    CHECK(c.rows() == kColumnFeatureChannels);
    CHECK(c(3, 1) == doctest::Approx(0.03 / 0.125));
    CHECK(c(4, 1) == doctest::Approx(0.4 / kPi));
    CHECK(c(7, 1) == doctest::Approx(0.03 / 0.125 * std::cos(0.4) / 8));
}

TEST_CASE("features reproduce the principal root phases") {
    std::mt19937_64 rng(1);
    RadioConfig radio;
    const auto g = random_geometry(radio, rng);
    const CfrMatrix two = random_cfr(16, 80, rng);
    const CfrMatrix root = half_phase_sqrt(two);
    for (int n : {0, 7, 15}) {
        const Eigen::MatrixXd f = extract_features(two, g, radio, SliceAxis::row, n);
        for (int m = 0; m < 80; ++m) CHECK(std::abs(std::atan2(f(1, m), f(0, m)) - std::arg(root(n, m))) < 1e-12);
    }
    for (int m : {0, 41}) {
        const Eigen::MatrixXd f = extract_features(two, g, radio, SliceAxis::column, m);
        for (int n = 0; n < 16; ++n) CHECK(std::abs(std::atan2(f(1, n), f(0, n)) - std::arg(root(n, m))) < 1e-12);
    }
}

TEST_CASE("feature errors") {
    RadioConfig radio = small_radio(2, 3);
    VaaGeometry g{{0.0, 0.03}, {0.0, 0.0}};
    CfrMatrix two = CfrMatrix::Ones(2, 3);
    CHECK_THROWS_AS(extract_features(two, g, radio, SliceAxis::row, 2), std::out_of_range);
    CHECK_THROWS_AS(extract_features(two, g, radio, SliceAxis::column, -1), std::out_of_range);
    two.row(1).setZero();
    CHECK_THROWS_AS(extract_features(two, g, radio, SliceAxis::row, 1), DegenerateInputError);
}

TEST_CASE("zero-weight model predicts one half everywhere") {
    PredictorModel m = PredictorModel::create(PredictorRole::row, 5, {4, 8}, 3);
    m.zero();
    const Eigen::VectorXd p = predict(m, Eigen::MatrixXd::Random(5, 80));
    CHECK((p.array() == 0.5).all());
}

TEST_CASE("forward pass matches a scalar reference") {
    std::mt19937_64 rng(2);
    for (auto widths : {std::vector<int>{3}, std::vector<int>{3, 4}, std::vector<int>{2, 3, 5}}) {
        PredictorModel m = PredictorModel::create(PredictorRole::column, 4, widths, 17);
        // Non-zero biases so they are exercised too.
        for (auto& l : m.layers()) l.bias = Eigen::VectorXd::NullaryExpr(l.bias.size(), [&] {
            return std::normal_distribution<double>(0.0, 0.1)(rng);
        });
        for (int len : {16, 13, 5}) {
            const Eigen::MatrixXd f = Eigen::MatrixXd::NullaryExpr(4, len, [&] {
                return std::normal_distribution<double>(0.0, 1.0)(rng);
            });
            const Eigen::VectorXd got = m.logits({&f}).col(0);
            const auto ref = forward_ref(m, f);
            for (int t = 0; t < len; ++t) CHECK(std::abs(got(t) - ref[static_cast<std::size_t>(t)]) < 1e-6);
        }
    }
}

TEST_CASE("batched and single predictions agree and are deterministic") {
    PredictorModel m = PredictorModel::create(PredictorRole::row, 5, {4, 8, 8}, 5);
    std::mt19937_64 rng(3);
    const auto samples = toy_samples(3, 5, 20, rng);
    const Eigen::MatrixXd z = m.logits({&samples[0].features, &samples[1].features, &samples[2].features});
    for (int b = 0; b < 3; ++b) {
        const Eigen::VectorXd single = m.logits({&samples[static_cast<std::size_t>(b)].features}).col(0);
        CHECK((single - z.col(b)).cwiseAbs().maxCoeff() < 1e-12);
    }
    const Eigen::VectorXd p1 = predict(m, samples[0].features);
    const Eigen::VectorXd p2 = predict(m, samples[0].features);
    CHECK((p1.array() == p2.array()).all());
    CHECK(p1.minCoeff() > 0.0);
    CHECK(p1.maxCoeff() < 1.0);
}

TEST_CASE("channel mismatch is rejected") {
    PredictorModel m = PredictorModel::create(PredictorRole::row, 5, {4}, 1);
    CHECK_THROWS_AS(predict(m, Eigen::MatrixXd::Zero(3, 10)), std::invalid_argument);
}

TEST_CASE("loss gradient matches central differences") {
    std::mt19937_64 rng(4);
    for (int instance = 0; instance < 5; ++instance) {
        PredictorModel m = PredictorModel::create(PredictorRole::row, 2, {2, 3}, 100 + instance);
        for (auto& l : m.layers()) l.bias.setConstant(0.05);
        CHECK(m.parameter_count() <= 100);
        const auto samples = toy_samples(2, 2, 9, rng);
        const std::vector<const Sample*> batch{&samples[0], &samples[1]};
        ModelGradients grad;
        loss_and_gradient(m, batch, &grad);
        const double h = 1e-6;
        for (std::size_t li = 0; li < m.layers().size(); ++li) {
            auto& w = m.layers()[li].weight;
            for (Eigen::Index i = 0; i < w.size(); ++i) {
                const double keep = w.data()[i];
                w.data()[i] = keep + h;
                const double up = loss_and_gradient(m, batch, nullptr);
                w.data()[i] = keep - h;
                const double down = loss_and_gradient(m, batch, nullptr);
                w.data()[i] = keep;
                const double fd = (up - down) / (2 * h);
                const double an = grad.weight[li].data()[i];
                CHECK(std::abs(fd - an) <= 1e-4 * std::max(std::abs(fd), 1e-3));
            }
            auto& b = m.layers()[li].bias;
            for (Eigen::Index i = 0; i < b.size(); ++i) {
                const double keep = b(i);
                b(i) = keep + h;
                const double up = loss_and_gradient(m, batch, nullptr);
                b(i) = keep - h;
                const double down = loss_and_gradient(m, batch, nullptr);
                b(i) = keep;
                const double fd = (up - down) / (2 * h);
                CHECK(std::abs(fd - grad.bias[li](i)) <= 1e-4 * std::max(std::abs(fd), 1e-3));
            }
        }
    }
}

TEST_CASE("a single sample is memorized") {
    std::mt19937_64 rng(5);
    const auto samples = toy_samples(1, 3, 16, rng);
    PredictorModel m = PredictorModel::create(PredictorRole::row, 3, {8, 16}, 9);
    TrainConfig cfg;
    cfg.learning_rate = 1e-2;
    cfg.batch_size = 1;
    cfg.epochs = 400;
    cfg.patience = 400;
    const TrainResult r = train(m, samples, {}, cfg);
    CHECK(r.history.validation_loss[static_cast<std::size_t>(r.history.best_epoch)] < 0.01);
    CHECK(evaluate(r.model, samples).second == 1.0);
}

TEST_CASE("training reduces loss, keeps the best epoch and stops early") {
    std::mt19937_64 rng(6);
    // Learnable rule: target is whether the first channel is positive.
    auto make = [&](int count) {
        auto s = toy_samples(count, 2, 12, rng);
        for (auto& x : s) x.targets = (x.features.row(0).array() > 0).cast<double>().transpose();
        return s;
    };
    const auto training = make(64), validation = make(32);
    TrainConfig cfg;
    cfg.learning_rate = 5e-3;
    cfg.batch_size = 16;
    cfg.epochs = 40;
    cfg.patience = 3;
    int calls = 0;
    const TrainResult r = train(PredictorModel::create(PredictorRole::row, 2, {4, 8}, 2), training, validation, cfg,
                                [&](int, double, double, double) { ++calls; });
    const auto& h = r.history;
    CHECK(calls == static_cast<int>(h.train_loss.size()));
    CHECK(h.train_loss.back() < h.train_loss.front());
    const double best = *std::min_element(h.validation_loss.begin(), h.validation_loss.end());
    CHECK(h.validation_loss[static_cast<std::size_t>(h.best_epoch)] == best);
    CHECK(evaluate(r.model, validation).first == doctest::Approx(best));
    // smoothed training loss is non-increasing
    for (std::size_t e = 4; e < h.train_loss.size(); e += 4) {
        const double prev = (h.train_loss[e - 4] + h.train_loss[e - 3]) / 2;
        const double cur = (h.train_loss[e - 1] + h.train_loss[e]) / 2;
        CHECK(cur <= prev + 1e-3);
    }
}

TEST_CASE("divergent training is reported") {
    std::mt19937_64 rng(7);
    auto samples = toy_samples(4, 2, 8, rng);
    samples[0].features(0, 0) = std::numeric_limits<double>::quiet_NaN();
    TrainConfig cfg;
    cfg.epochs = 1;
    CHECK_THROWS_AS(train(PredictorModel::create(PredictorRole::row, 2, {4}, 1), samples, {}, cfg),
                    TrainingDivergedError);
    cfg.learning_rate = 0.0;
    CHECK_THROWS(cfg.validate());
}

TEST_CASE("weight file round trip is exact") {
    PredictorModel m = PredictorModel::create(PredictorRole::column, 9, {4, 8, 8}, 77);
    for (auto& l : m.layers()) l.bias.setConstant(1.0 / 3.0);
    const auto path = std::filesystem::temp_directory_path() / "blevaa_model_roundtrip.json";
    m.save(path);
    const PredictorModel back = PredictorModel::load(path);
    std::filesystem::remove(path);
    CHECK(back.role() == PredictorRole::column);
    CHECK(back.seed() == 77);
    REQUIRE(back.layers().size() == m.layers().size());
    for (std::size_t i = 0; i < m.layers().size(); ++i) {
        CHECK((back.layers()[i].weight.array() == m.layers()[i].weight.array()).all());
        CHECK((back.layers()[i].bias.array() == m.layers()[i].bias.array()).all());
    }
    std::string text = m.to_json();
    const auto pos = text.find("\"format_version\":1");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 18, "\"format_version\":2");
    CHECK_THROWS(PredictorModel::from_json(text));
}

TEST_CASE("learned probabilities cover both axes") {
    std::mt19937_64 rng(8);
    RadioConfig radio;
    const auto g = random_geometry(radio, rng);
    const CfrMatrix two = random_cfr(16, 80, rng);
    const PredictorModel row = PredictorModel::create(PredictorRole::row, kRowFeatureChannels, {4, 8}, 1);
    const PredictorModel col = PredictorModel::create(PredictorRole::column, kColumnFeatureChannels, {4, 8}, 2);
    const SignProbabilities p = learned_probabilities(two, g, radio, row, col);
    CHECK(p.row.rows() == 16);
    CHECK(p.row.cols() == 80);
    CHECK(p.col.rows() == 16);
    CHECK(p.col.cols() == 80);
    const Eigen::VectorXd r5 = predict(row, extract_features(two, g, radio, SliceAxis::row, 5));
    CHECK((p.row.row(5).transpose() - r5).cwiseAbs().maxCoeff() < 1e-12);
    const Eigen::VectorXd c9 = predict(col, extract_features(two, g, radio, SliceAxis::column, 9));
    CHECK((p.col.col(9) - c9).cwiseAbs().maxCoeff() < 1e-12);
    CHECK_THROWS_AS(learned_probabilities(two, g, radio, col, row), DimensionError);
}
