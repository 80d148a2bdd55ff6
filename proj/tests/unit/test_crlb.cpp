#include <doctest.h>

#include "blevaa/crlb.hpp"
#include "blevaa/signal_model.hpp"
#include "helpers.hpp"

using namespace blevaa;
using namespace testutil;

namespace {

RadioConfig four_by_eight() { return small_radio(4, 8); }

VaaGeometry bent_array() { return VaaGeometry::from_positions({0.0, 0.03, 0.05, 0.09}, {0.0, 0.01, -0.02, 0.0}); }

Eigen::VectorXcd vec_mean(const VaaGeometry& g, const RadioConfig& radio, const PathSet& paths) {
    const CfrMatrix y = noiseless_cfr(g, radio, paths);
    return Eigen::Map<const Eigen::VectorXcd>(y.data(), y.size());
}

}  // namespace

TEST_CASE("jacobian matches central differences") {
    std::mt19937_64 rng(1);
    RadioConfig radio = small_radio(6, 12);
    for (int trial = 0; trial < 5; ++trial) {
        const auto g = random_geometry(radio, rng);
        const PathSet paths = random_paths(1 + trial % 3, rng);
        const auto l = static_cast<Eigen::Index>(paths.size());
        const Eigen::MatrixXcd jac = mean_jacobian(g, radio, paths);
        REQUIRE(jac.rows() == 72);
        REQUIRE(jac.cols() == 4 * l);
        for (Eigen::Index col = 0; col < 4 * l; ++col) {
            const auto p = static_cast<std::size_t>(col % l);
            const int kind = static_cast<int>(col / l);
            const double h = kind == 1 ? 1e-13 : 1e-6;
            PathSet up = paths, down = paths;
            switch (kind) {
                case 0: up[p].doa_rad += h; down[p].doa_rad -= h; break;
                case 1: up[p].toa_s += h; down[p].toa_s -= h; break;
                case 2: up[p].gain += h; down[p].gain -= h; break;
                default: up[p].gain += cdouble(0, h); down[p].gain -= cdouble(0, h); break;
            }
            const Eigen::VectorXcd fd = (vec_mean(g, radio, up) - vec_mean(g, radio, down)) / (2 * h);
            CHECK((fd - jac.col(col)).norm() <= 1e-6 * std::max(fd.norm(), 1e-12 / h));
        }
    }
}

TEST_CASE("collapsed array has zero DoA columns and the ToA column vanishes at the first subcarrier") {
    RadioConfig radio = four_by_eight();
    VaaGeometry g{{0, 0, 0, 0}, {0, 0, 0, 0}};
    const PathSet paths{{1.0, 90e-9, {0.7, 0.2}}};
    const Eigen::MatrixXcd jac = mean_jacobian(g, radio, paths);
    CHECK(jac.col(0).norm() == 0.0);
    for (int n = 0; n < 4; ++n) CHECK(jac(n, 1) == cdouble(0, 0));
    CHECK(jac.col(1).norm() > 0.0);
}

TEST_CASE("fisher matrix against a double-loop oracle") {
    std::mt19937_64 rng(2);
    const Eigen::MatrixXcd jac = random_cfr(20, 8, rng);
    const FisherMatrix f = fisher_information(jac, 0.5);
    REQUIRE(f.num_paths == 2);
    for (int a = 0; a < 8; ++a)
        for (int b = 0; b < 8; ++b) {
            double acc = 0;
            for (int r = 0; r < 20; ++r) acc += (std::conj(jac(r, a)) * jac(r, b)).real();
            CHECK(f.values()(a, b) == doctest::Approx(8.0 * acc).epsilon(1e-12));
        }
    CHECK(f.values() == f.values().transpose());
    CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(f.values()).eigenvalues().minCoeff() > -1e-9);
    CHECK_THROWS(fisher_information(jac, 0.0));
    CHECK_THROWS_AS(fisher_information(random_cfr(20, 6, rng), 1.0), DimensionError);
}

TEST_CASE("fisher information scales with the inverse noise variance") {
    std::mt19937_64 rng(3);
    const Eigen::MatrixXcd jac = random_cfr(10, 4, rng);
    const FisherMatrix a = fisher_information(jac, 1.0);
    const FisherMatrix b = fisher_information(jac, 0.1);
    CHECK((b.values() - 100.0 * a.values()).norm() < 1e-10 * b.values().norm());
    CHECK(b.gram == a.gram);
}

TEST_CASE("bounds for a single path") {
    const CrlbBounds b = compute_crlb(bent_array(), four_by_eight(), {{kPi / 3, 100e-9, {1.0, 0.0}}}, 0.1);
    REQUIRE(b.doa_rad2.size() == 1);
    CHECK(b.doa_deg2(0) == doctest::Approx(0.227903300394613).epsilon(1e-9));
    CHECK(b.toa_ns2(0) == doctest::Approx(0.75387785448168).epsilon(1e-9));
}

TEST_CASE("bounds for two paths") {
    const PathSet paths{{kPi / 3, 100e-9, {1.0, 0.0}}, {2.0, 250e-9, std::polar(0.5, 0.7)}};
    const CrlbBounds b = compute_crlb(bent_array(), four_by_eight(), paths, 0.1);
    REQUIRE(b.doa_rad2.size() == 2);
    CHECK(b.doa_deg2(0) == doctest::Approx(0.230953917344915).epsilon(1e-9));
    CHECK(b.doa_deg2(1) == doctest::Approx(0.964038526670544).epsilon(1e-9));
    CHECK(b.toa_ns2(0) == doctest::Approx(0.762313342674181).epsilon(1e-9));
    CHECK(b.toa_ns2(1) == doctest::Approx(3.049032428971724).epsilon(1e-9));
}

TEST_CASE("ten dB more SNR divides the bound by ten") {
    std::mt19937_64 rng(4);
    RadioConfig radio;
    for (int trial = 0; trial < 10; ++trial) {
        const auto g = random_geometry(radio, rng);
        const PathSet paths = random_paths(2, rng);
        const CrlbBounds lo = compute_crlb(g, radio, paths, noise_std_from_snr_db(0.0));
        const CrlbBounds hi = compute_crlb(g, radio, paths, noise_std_from_snr_db(10.0));
        for (std::size_t p = 0; p < 2; ++p) {
            CHECK(lo.doa_rad2[p] / hi.doa_rad2[p] == doctest::Approx(10.0).epsilon(1e-12));
            CHECK(lo.toa_s2[p] / hi.toa_s2[p] == doctest::Approx(10.0).epsilon(1e-12));
            CHECK(lo.doa_rad2[p] > 0.0);
        }
    }
}

TEST_CASE("unidentifiable DoA is reported by name") {
    RadioConfig radio = four_by_eight();
    VaaGeometry g{{0, 0, 0, 0}, {0, 0, 0, 0}};
    try {
        compute_crlb(g, radio, {{1.0, 90e-9, {1.0, 0.0}}}, 0.1);
        FAIL("expected a singular Fisher matrix");
    } catch (const SingularFisherError& e) {
        CHECK(e.parameter() == "theta_1");
    }
    // two coincident paths cannot be told apart
    const PathSet twins{{1.0, 90e-9, {1.0, 0.0}}, {1.0, 90e-9, {0.5, 0.0}}};
    CHECK_THROWS_AS(compute_crlb(bent_array(), radio, twins, 0.1), SingularFisherError);
}
