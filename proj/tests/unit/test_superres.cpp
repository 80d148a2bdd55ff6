#include <doctest.h>

#include <cmath>

#include "blevaa/signal_model.hpp"
#include "blevaa/superres.hpp"
#include "helpers.hpp"

using namespace blevaa;
using namespace testutil;

namespace {

constexpr double kDeg = kPi / 180.0;

MusicConfig coarse_music(int order, int ms) {
    MusicConfig m;
    m.model_order = order;
    m.subband_length = ms;
    m.doa_grid = {0.0, 179.0 * kDeg, 1.0 * kDeg};
    m.toa_grid = {0.0, 300e-9, 2e-9};
    return m;
}

double min_hermitian_eigenvalue(const Eigen::MatrixXcd& r) {
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(r).eigenvalues().minCoeff();
}

Pseudospectrum tiny_grid_spectrum(const MusicConfig& base) {
    MusicConfig m = base;
    m.doa_grid = {30 * kDeg, 34 * kDeg, 1 * kDeg};
    m.toa_grid = {100e-9, 104e-9, 1e-9};
    return {m.doa_grid.nodes(), m.toa_grid.nodes(), {}};
}

}  // namespace

TEST_CASE("grid nodes include both ends") {
    const GridSpec g{0.0, 1.0, 0.25};
    const auto n = g.nodes();
    REQUIRE(n.size() == 5);
    CHECK(n.back() == doctest::Approx(1.0));
    CHECK(MusicConfig{}.doa_grid.nodes().size() == 720);
    CHECK(MusicConfig{}.toa_grid.nodes().size() == 801);
    CHECK_THROWS(GridSpec({1.0, 0.0, 0.1}).nodes());
    CHECK_THROWS(GridSpec({0.0, 1.0, 0.0}).nodes());
}

TEST_CASE("spatial covariance example") {
    CfrMatrix y(2, 1);
    y << cdouble(1, 0), cdouble(0, 1);
    const Eigen::MatrixXcd r = spatial_covariance(y);
    CHECK(std::abs(r(0, 0) - cdouble(1, 0)) < 1e-15);
    CHECK(std::abs(r(0, 1) - cdouble(0, -1)) < 1e-15);
    CHECK(std::abs(r(1, 0) - cdouble(0, 1)) < 1e-15);
}

TEST_CASE("smoothed covariance reductions") {
    std::mt19937_64 rng(1);
    const CfrMatrix y = random_cfr(4, 7, rng);
    SUBCASE("one-subcarrier windows give the spatial covariance") {
        CHECK((smoothed_joint_covariance(y, 1) - spatial_covariance(y)).norm() < 1e-12);
    }
    SUBCASE("a full-width window is the outer product of vec(Y)") {
        const Eigen::VectorXcd v = Eigen::Map<const Eigen::VectorXcd>(y.data(), y.size());
        CHECK((smoothed_joint_covariance(y, 7) - v * v.adjoint()).norm() < 1e-12);
    }
    SUBCASE("element oracle") {
        const int ms = 3;
        const Eigen::MatrixXcd r = smoothed_joint_covariance(y, ms);
        REQUIRE(r.rows() == 12);
        for (int a = 0; a < 12; ++a)
            for (int b = 0; b < 12; ++b) {
                cdouble acc = 0;
                for (int k = 0; k <= 7 - ms; ++k) acc += y(a % 4, k + a / 4) * std::conj(y(b % 4, k + b / 4));
                CHECK(std::abs(r(a, b) - acc / 5.0) < 1e-12);
            }
    }
    CHECK_THROWS(smoothed_joint_covariance(y, 8));
    CHECK_THROWS(smoothed_joint_covariance(y, 0));
}

TEST_CASE("smoothed covariance is Hermitian and positive semidefinite") {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const CfrMatrix y = random_cfr(5, 12, rng);
        for (bool fb : {false, true}) {
            const Eigen::MatrixXcd r = smoothed_joint_covariance(y, 4, fb);
            CHECK((r - r.adjoint()).norm() < 1e-12 * r.norm());
            CHECK(min_hermitian_eigenvalue(r) > -1e-10 * r.norm());
        }
    }
}

TEST_CASE("noiseless response with L paths gives a rank-L covariance") {
    std::mt19937_64 rng(3);
    RadioConfig radio = small_radio(8, 24);
    const auto g = random_geometry(radio, rng);
    for (int l : {1, 2, 3}) {
        const CfrMatrix y = noiseless_cfr(g, radio, random_paths(l, rng));
        const SubspaceSplit s = split_subspace(smoothed_joint_covariance(y, 8), l);
        CHECK(s.eigenvalues(l - 1) > 1e-6 * s.eigenvalues(0));
        CHECK(std::abs(s.eigenvalues(l)) < 1e-10 * s.eigenvalues(0));
        CHECK(s.signal.cols() == l);
        CHECK(s.noise.cols() == 64 - l);
        for (Eigen::Index k = 1; k < s.eigenvalues.size(); ++k) CHECK(s.eigenvalues(k) <= s.eigenvalues(k - 1));
    }
}

TEST_CASE("joint steering is the vectorized outer product") {
    std::mt19937_64 rng(4);
    RadioConfig radio = small_radio(6, 20);
    const auto g = random_geometry(radio, rng);
    const Eigen::VectorXcd a = joint_steering(g, radio, 5, 1.1, 80e-9);
    const Eigen::VectorXcd as = spatial_steering(g, radio, 1.1);
    const Eigen::VectorXcd af = frequency_steering(radio, 80e-9);
    for (int j = 0; j < 5; ++j)
        for (int n = 0; n < 6; ++n) CHECK(std::abs(a(n + 6 * j) - as(n) * std::conj(af(j))) < 1e-12);
    // doubled phases equal the element-wise square
    const Eigen::VectorXcd a2 = joint_steering(g, radio, 5, 1.1, 80e-9, SteeringScale{2.0});
    CHECK((a2 - a.cwiseProduct(a)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("spectrum matches a brute-force noise-subspace projection") {
    std::mt19937_64 rng(5);
    RadioConfig radio = small_radio(6, 20);
    const auto g = random_geometry(radio, rng);
    const CfrMatrix y = synthesize_cfr(g, radio, random_paths(2, rng), 0.3, rng);
    MusicConfig m = coarse_music(2, 5);
    const Pseudospectrum grid = tiny_grid_spectrum(m);
    m.doa_grid = {30 * kDeg, 34 * kDeg, 1 * kDeg};
    m.toa_grid = {100e-9, 104e-9, 1e-9};
    for (double scale : {1.0, 2.0}) {
        const Eigen::MatrixXcd cov = smoothed_joint_covariance(y, 5);
        const Pseudospectrum p = music_spectrum(cov, g, radio, m, SteeringScale{scale});
        REQUIRE(p.power.rows() == 5);
        REQUIRE(p.power.cols() == 5);
        const SubspaceSplit s = split_subspace(cov, 2);
        for (int i = 0; i < 5; ++i)
            for (int t = 0; t < 5; ++t) {
                const Eigen::VectorXcd a = joint_steering(g, radio, 5, grid.doa_rad[static_cast<std::size_t>(i)],
                                                          grid.toa_s[static_cast<std::size_t>(t)], SteeringScale{scale});
                const double ref = 1.0 / (s.noise.adjoint() * a).squaredNorm();
                CHECK(std::abs(p.power(i, t) / ref - 1.0) < 1e-10);
                CHECK(std::abs(music_value(s, g, radio, 5, grid.doa_rad[static_cast<std::size_t>(i)],
                                           grid.toa_s[static_cast<std::size_t>(t)], SteeringScale{scale}) /
                                   ref -
                               1.0) < 1e-10);
            }
    }
}

TEST_CASE("single noiseless path peaks at the truth") {
    std::mt19937_64 rng(6);
    RadioConfig radio = small_radio(16, 40);
    const auto g = random_geometry(radio, rng);
    const MusicConfig m = coarse_music(1, 4);
    const PathSet paths{{62 * kDeg, 140e-9, std::polar(1.0, 0.4)}};
    const CfrMatrix y = noiseless_cfr(g, radio, paths);
    const Pseudospectrum p = music_spectrum(smoothed_joint_covariance(y, 4), g, radio, m);
    Eigen::Index bi, bt;
    const double best = p.power.maxCoeff(&bi, &bt);
    CHECK(bi == 62);
    CHECK(bt == 70);
    // at least 40 dB below the peak once outside a few cells of the truth
    for (Eigen::Index t = 0; t < p.power.cols(); ++t)
        for (Eigen::Index i = 0; i < p.power.rows(); ++i)
            if (std::abs(i - 62) > 20 && std::abs(t - 70) > 20) CHECK(10 * std::log10(best / p.power(i, t)) >= 40.0);

    MusicConfig fine = m;
    const EstimateSet est = estimate_one_way(y, g, radio, fine);
    REQUIRE(est.items.size() == 1);
    CHECK(std::abs(est.items[0].doa_rad - 62 * kDeg) < 1e-3 * kDeg + 1e-9);
    CHECK(std::abs(est.items[0].toa_s - 140e-9) < 1e-12);
}

TEST_CASE("refinement finds an off-grid path") {
    std::mt19937_64 rng(7);
    RadioConfig radio = small_radio(12, 30);
    const auto g = random_geometry(radio, rng);
    const PathSet paths{{70.4 * kDeg, 121.3e-9, {1.0, 0.0}}};
    const CfrMatrix y = noiseless_cfr(g, radio, paths);
    MusicConfig m = coarse_music(1, 6);
    m.refine = false;
    const EstimateSet grid_only = estimate_one_way(y, g, radio, m);
    m.refine = true;
    const EstimateSet refined = estimate_one_way(y, g, radio, m);
    CHECK(std::abs(refined.items[0].doa_rad - paths[0].doa_rad) < std::abs(grid_only.items[0].doa_rad - paths[0].doa_rad));
    CHECK(std::abs(refined.items[0].doa_rad - paths[0].doa_rad) < 0.02 * kDeg);
    CHECK(std::abs(refined.items[0].toa_s - paths[0].toa_s) < 0.05e-9);
}

TEST_CASE("two noiseless paths are resolved") {
    std::mt19937_64 rng(8);
    RadioConfig radio = small_radio(16, 40);
    const auto g = random_geometry(radio, rng);
    const PathSet paths{{50 * kDeg, 80e-9, {1.0, 0.0}}, {120 * kDeg, 180e-9, std::polar(0.6, 1.0)}};
    const EstimateSet est = estimate_one_way(noiseless_cfr(g, radio, paths), g, radio, coarse_music(2, 8));
    REQUIRE(est.items.size() == 2);
    CHECK_FALSE(est.degenerate);
    for (const auto& truth : paths) {
        bool found = false;
        for (const auto& e : est.items)
            found |= std::abs(e.doa_rad - truth.doa_rad) < 0.01 * kDeg && std::abs(e.toa_s - truth.toa_s) < 0.01e-9;
        CHECK(found);
    }
}

TEST_CASE("spectrum is invariant to a global sign flip") {
    std::mt19937_64 rng(9);
    RadioConfig radio = small_radio(8, 20);
    const auto g = random_geometry(radio, rng);
    const CfrMatrix y = synthesize_cfr(g, radio, random_paths(2, rng), 0.1, rng);
    const MusicConfig m = coarse_music(2, 6);
    const Pseudospectrum a = music_spectrum(smoothed_joint_covariance(y, 6), g, radio, m);
    const Pseudospectrum b = music_spectrum(smoothed_joint_covariance(CfrMatrix(-y), 6), g, radio, m);
    CHECK(((a.power - b.power).cwiseAbs().array() <= 1e-9 * a.power.array()).all());
}

TEST_CASE("identity covariance gives a flat spectrum") {
    RadioConfig radio = small_radio(4, 10);
    VaaGeometry g{{0.0, 0.03, 0.06, 0.09}, {0.0, 0.0, 0.0, 0.0}};
    const MusicConfig m = coarse_music(1, 3);
    const Pseudospectrum p = music_spectrum(Eigen::MatrixXcd::Identity(12, 12), g, radio, m);
    CHECK(p.power.maxCoeff() - p.power.minCoeff() < 1e-12 * p.power.maxCoeff());
    const EstimateSet est = find_peaks(p, 2);
    CHECK(est.degenerate);
    CHECK(est.items.size() == 2);
}

TEST_CASE("peak picking examples") {
    Pseudospectrum p;
    p.doa_rad = {0.0, 1.0, 2.0, 3.0};
    p.toa_s = {0.0, 1.0, 2.0, 3.0};
    p.power.resize(4, 4);
    p.power << 1, 2, 1, 0,  //
        2, 5, 2, 0,         //
        1, 2, 1, 3,         //
        0, 0, 2, 1;
    const EstimateSet two = find_peaks(p, 2);
    CHECK_FALSE(two.degenerate);
    REQUIRE(two.items.size() == 2);
    CHECK(two.items[0].doa_rad == 1.0);
    CHECK(two.items[0].toa_s == 1.0);
    CHECK(two.items[0].peak == 5.0);
    CHECK(two.items[1].doa_rad == 2.0);
    CHECK(two.items[1].toa_s == 3.0);

    // a plateau is not a strict maximum; padding takes the largest remaining nodes
    p.power(2, 2) = 3;
    const EstimateSet three = find_peaks(p, 3);
    CHECK(three.degenerate);
    REQUIRE(three.items.size() == 3);
    CHECK(three.items[0].peak == 5.0);
    CHECK(three.items[1].peak == 3.0);
    CHECK(three.items[2].peak == 3.0);
    CHECK_THROWS(find_peaks(p, 0));
}

TEST_CASE("two-way baseline locates a single path") {
    std::mt19937_64 rng(10);
    RadioConfig radio = small_radio(16, 40);
    // short steps keep the doubled spatial phases unambiguous
    std::vector<double> x(16), yv(16, 0.0);
    for (int n = 0; n < 16; ++n) x[static_cast<std::size_t>(n)] = 0.2 * radio.carrier_wavelength_m * n;
    for (int n = 1; n < 16; n += 2) yv[static_cast<std::size_t>(n)] = 0.05 * radio.carrier_wavelength_m;
    const auto g = VaaGeometry::from_positions(x, yv);
    const PathSet paths{{75 * kDeg, 120e-9, std::polar(1.0, 0.9)}};
    const CfrMatrix y = noiseless_cfr(g, radio, paths);
    const CfrMatrix two = y.cwiseProduct(y);
    MusicConfig m = coarse_music(1, 8);
    m.toa_grid = {0.0, 240e-9, 2e-9};
    const EstimateSet est = estimate_two_way_baseline(two, g, radio, m);
    REQUIRE(est.items.size() == 1);
    CHECK(std::abs(est.items[0].doa_rad - paths[0].doa_rad) < 0.01 * kDeg);
    CHECK(std::abs(est.items[0].toa_s - paths[0].toa_s) < 0.01e-9);
}

TEST_CASE("estimator argument checks") {
    RadioConfig radio = small_radio(4, 10);
    VaaGeometry g{{0.0, 0.03, 0.06, 0.09}, {0.0, 0.0, 0.0, 0.0}};
    MusicConfig m = coarse_music(1, 11);
    CHECK_THROWS(m.validate(radio));
    m = coarse_music(12, 3);
    CHECK_THROWS(m.validate(radio));
    m = coarse_music(1, 3);
    CHECK_THROWS_AS(estimate_one_way(CfrMatrix::Ones(4, 9), g, radio, m), DimensionError);
    CHECK_THROWS_AS(music_spectrum(Eigen::MatrixXcd::Identity(10, 10), g, radio, m), DimensionError);
}
