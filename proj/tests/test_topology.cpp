#include <doctest.h>

#include <cmath>
#include <random>

#include "depositum/errors.hpp"
#include "depositum/topology.hpp"
#include "oracles.hpp"

using namespace depositum;

namespace {

void check_doubly_stochastic(const MixingMatrix& m) {
    const auto& w = m.weights();
    CHECK((w - w.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((w.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
    CHECK((w.colwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
    CHECK(w.minCoeff() >= 0.0);
}

}  // namespace

TEST_CASE("complete graph with uniform weights is J") {
    const auto m = build_mixing(TopologySpec::complete(4));
    CHECK(m.weights().isApprox(Eigen::MatrixXd::Constant(4, 4, 0.25), 1e-15));
    CHECK(m.lambda() <= 1e-12);
    check_doubly_stochastic(m);
}

TEST_CASE("ring and star spectra match independent eigensolver") {
    const auto ring = build_mixing(TopologySpec::ring(4));
    CHECK(std::abs(ring.lambda() - 1.0 / 3.0) <= 1e-10);
    CHECK(std::abs(oracle::connectivity(ring.weights()) - 1.0 / 3.0) <= 1e-10);

    const auto star = build_mixing(TopologySpec::star(3));
    Eigen::MatrixXd expected(3, 3);
    expected << 1.0 / 3, 1.0 / 3, 1.0 / 3, 1.0 / 3, 2.0 / 3, 0, 1.0 / 3, 0, 2.0 / 3;
    CHECK(star.weights().isApprox(expected, 1e-14));
    CHECK(std::abs(star.lambda() - 2.0 / 3.0) <= 1e-10);
    const auto ev = oracle::jacobi_eigenvalues(star.weights());
    CHECK(std::abs(ev[0]) <= 1e-12);
    CHECK(ev[1] == doctest::Approx(2.0 / 3.0));
    CHECK(ev[2] == doctest::Approx(1.0));
}

TEST_CASE("spectral gap") {
    CHECK(spectral_gap(Eigen::MatrixXd::Constant(5, 5, 0.2)) <= 1e-12);
    for (int n : {3, 5, 10, 17}) {
        const auto ring = build_mixing(TopologySpec::ring(n));
        CHECK(std::abs(ring.lambda() - oracle::ring_connectivity(n)) <= 1e-10);
    }
    Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(3, 3);
    bad(0, 0) = 0.9;
    CHECK_THROWS_AS(spectral_gap(bad), NotStochastic);
}

TEST_CASE("metropolis weights on arbitrary graphs") {
    const auto spec = TopologySpec::edge_list(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {1, 3}, {0, 1}});
    const auto m = build_mixing(spec);
    check_doubly_stochastic(m);
    const auto& w = m.weights();
    CHECK(w(0, 1) == doctest::Approx(1.0 / 4.0));  // deg 1 vs 3
    CHECK(w(1, 3) == doctest::Approx(1.0 / 4.0));
    CHECK(w(0, 2) == 0.0);
    CHECK(w(0, 0) == doctest::Approx(3.0 / 4.0));
    CHECK(std::abs(m.lambda() - oracle::connectivity(w)) <= 1e-10);
}

TEST_CASE("topology errors") {
    CHECK_THROWS_AS(build_mixing(TopologySpec::edge_list(4, {{0, 1}, {2, 3}})), DisconnectedGraph);
    CHECK_THROWS_AS(build_mixing(TopologySpec::star(4, Weighting::Uniform)), NonDoublyStochastic);
    CHECK_THROWS_AS(build_mixing(TopologySpec::edge_list(3, {{0, 0}, {1, 2}})), InvalidTopology);
    CHECK_THROWS_AS(build_mixing(TopologySpec::edge_list(3, {{0, 3}})), InvalidTopology);
    Eigen::MatrixXd asym(2, 2);
    asym << 0.5, 0.5, 0.4, 0.6;
    CHECK_THROWS_AS(MixingMatrix::from_weights(asym), NonDoublyStochastic);
}

TEST_CASE("lambda grows as circulant neighbourhoods shrink") {
    const int n = 12;
    double previous = -1.0;
    for (int k = n / 2; k >= 1; --k) {
        std::vector<std::pair<int, int>> edges;
        for (int i = 0; i < n; ++i)
            for (int s = 1; s <= k; ++s)
                if (i < (i + s) % n || s < n - s) edges.emplace_back(i, (i + s) % n);
        const auto m = build_mixing(TopologySpec::edge_list(n, edges));
        const double lambda = m.lambda();
        CHECK(std::abs(lambda - oracle::connectivity(m.weights())) <= 1e-10);
        CHECK(lambda > previous);
        previous = lambda;
    }
    CHECK(std::abs(previous - oracle::ring_connectivity(n)) <= 1e-10);
}

TEST_CASE("communication rounds") {
    CHECK_FALSE(is_comm_round(0, 5));
    CHECK(is_comm_round(10, 5));
    CHECK_FALSE(is_comm_round(7, 5));
    CHECK_FALSE(is_comm_round(0, 1));
    CHECK(is_comm_round(1, 1));
    static_assert(is_comm_round(6, 3));
}

TEST_CASE("mix") {
    const auto ring = build_mixing(TopologySpec::ring(4));
    Stacked s(1, 4);
    s << 1, 2, 3, 4;
    const Stacked out = mix(ring, s);
    CHECK(out(0, 0) == doctest::Approx((4 + 1 + 2) / 3.0));
    CHECK(out(0, 1) == doctest::Approx((1 + 2 + 3) / 3.0));
    CHECK(out(0, 2) == doctest::Approx((2 + 3 + 4) / 3.0));
    CHECK(out(0, 3) == doctest::Approx((3 + 4 + 1) / 3.0));

    const Stacked avg = mix(build_mixing(TopologySpec::complete(4)), s);
    for (int i = 0; i < 4; ++i) CHECK(avg(0, i) == doctest::Approx(2.5));
    CHECK(mix(Eigen::MatrixXd::Identity(4, 4), s) == s);
    CHECK_THROWS_AS(mix(ring, Stacked::Zero(2, 3)), DimensionMismatch);

    std::mt19937_64 rng(9);
    std::normal_distribution<double> n(0, 10);
    const auto metro = build_mixing(TopologySpec::star(7));
    for (int k = 0; k < 20; ++k) {
        Stacked r(5, 7);
        for (auto& v : r.reshaped()) v = n(rng);
        const Eigen::VectorXd before = r.rowwise().mean();
        const Eigen::VectorXd after = mix(metro, r).rowwise().mean();
        CHECK((before - after).norm() <= 1e-12 * (1.0 + before.norm()));
    }
}

TEST_CASE("delta constants") {
    auto d = delta_params(0.0, 2, 0.0);
    CHECK(d.delta1 == doctest::Approx(4.0 / 27.0).epsilon(1e-14));
    CHECK(d.delta2 == doctest::Approx(4.0 / 27.0).epsilon(1e-14));
    d = delta_params(0.0, 1, 0.0);
    CHECK(d.delta1 == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(d.delta2 == doctest::Approx(0.25).epsilon(1e-14));
    d = delta_params(1.0 / 3.0, 1, 0.0);
    CHECK(d.delta1 == doctest::Approx(4.0 / 27.0).epsilon(1e-14));
    CHECK(d.delta2 == doctest::Approx(4.0 / 27.0).epsilon(1e-14));

    // complete-graph branch with alpha*rho > 0 uses exponent 2 T0 + 2
    d = delta_params(0.0, 2, 0.1);
    CHECK(d.delta1 == doctest::Approx(4.0 / 27.0 * std::pow(0.9, 6)).epsilon(1e-14));

    CHECK_NOTHROW(delta_params(0.0, 400, 0.0));
    CHECK(std::isfinite(delta_params(0.0, 400, 0.0).delta2));

    // admissibility: alpha*rho < 1 - lambda^(1/(2 T0))
    CHECK_THROWS_AS(delta_params(0.25, 1, 0.5), InadmissibleStep);
    CHECK_NOTHROW(delta_params(0.25, 1, 0.49));
    CHECK_THROWS_AS(delta_params(1.0, 1, 0.0), InadmissibleStep);
}

TEST_CASE("complete-graph delta values dominate") {
    for (int t0 : {1, 2, 5, 10}) {
        for (double ar : {0.0, 0.01, 0.05}) {
            const auto zero = delta_params(0.0, t0, ar);
            for (int k = 1; k <= 9; ++k) {
                const double lambda = k / 10.0;
                if (ar >= 1.0 - std::pow(lambda, 1.0 / (2.0 * t0))) continue;
                const auto d = delta_params(lambda, t0, ar);
                CHECK(d.delta1 > 0.0);
                CHECK(d.delta2 > 0.0);
                CHECK(zero.delta1 >= d.delta1);
                CHECK(zero.delta2 >= d.delta2);
            }
        }
    }
}

TEST_CASE("nesterov omega") {
    CHECK(nesterov_omega(0.0) == 1.0);
    CHECK(nesterov_omega(0.5) == doctest::Approx(5.0));
}
