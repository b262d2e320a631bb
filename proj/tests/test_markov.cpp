#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "permfield/markov.hpp"
#include "permfield/quadrature.hpp"
#include "permfield/stats.hpp"
#include "test_helpers.hpp"

using namespace permfield;

namespace {

MarkovModel pure_death() {
    ModelSpec spec;
    spec.states = {"a", "b"};
    spec.rates = Eigen::MatrixXd::Zero(2, 2);
    spec.kill = Eigen::VectorXd::Ones(2);
    spec.m = Eigen::VectorXd::Ones(2);
    return MarkovModel::build(spec);
}

}  // namespace

TEST_CASE("build K2 fixture") {
    const MarkovModel k2 = make_k2();
    CHECK(k2.size() == 2);
    CHECK(k2.generator()(0, 0) == doctest::Approx(-2.0));
    CHECK(k2.generator()(0, 1) == doctest::Approx(1.0));
    CHECK(k2.generator()(1, 0) == doctest::Approx(1.0));
    CHECK(k2.generator()(1, 1) == doctest::Approx(-2.0));
    CHECK(k2.warnings().empty());
}

TEST_CASE("pure-death chain is a valid model") {
    const MarkovModel pd = pure_death();
    CHECK(pd.generator().isApprox(-Eigen::MatrixXd::Identity(2, 2)));
}

TEST_CASE("conservative rates without killing are rejected") {
    ModelSpec spec;
    spec.states = {"a", "b"};
    spec.rates = Eigen::MatrixXd::Zero(2, 2);
    spec.rates(0, 1) = 1.0;
    spec.rates(1, 0) = 1.0;
    spec.kill = Eigen::VectorXd::Zero(2);
    spec.m = Eigen::VectorXd::Ones(2);
    CHECK_THROWS_AS(MarkovModel::build(spec), NonTransient);
}

TEST_CASE("model validation errors") {
    ModelSpec spec;
    spec.states = {"a", "b"};
    spec.rates = Eigen::MatrixXd::Zero(2, 2);
    spec.kill = Eigen::VectorXd::Ones(2);
    spec.m = Eigen::VectorXd::Ones(2);

    auto bad = spec;
    bad.rates(0, 1) = -0.5;
    CHECK_THROWS_AS(MarkovModel::build(bad), NegativeRate);

    bad = spec;
    bad.kill(0) = -1.0;
    CHECK_THROWS_AS(MarkovModel::build(bad), NegativeRate);

    bad = spec;
    bad.m(1) = 0.0;
    CHECK_THROWS_AS(MarkovModel::build(bad), NonpositiveWeight);
}

TEST_CASE("transition density small-t and frozen value") {
    const MarkovModel k2 = make_k2();
    const Eigen::MatrixXd p_small = k2.transition_density(1e-9);
    CHECK(p_small(0, 0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(p_small(0, 1) == doctest::Approx(0.0).epsilon(1e-6));

    // Spectral oracle: eigenvalues -1, -3, so p_1(a,a) = (e^-1 + e^-3)/2.
    const double expected = 0.5 * (std::exp(-1.0) + std::exp(-3.0));
    CHECK(k2.transition_density(1.0)(0, 0) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("Chapman-Kolmogorov on random time pairs") {
    const MarkovModel k4 = make_k4();
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const double s = rng.uniform(0.05, 2.0);
        const double t = rng.uniform(0.05, 2.0);
        const Eigen::MatrixXd lhs = k4.transition_density(s) *
                                    k4.weights().asDiagonal() *
                                    k4.transition_density(t);
        const Eigen::MatrixXd rhs = k4.transition_density(s + t);
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("potential kernel closed forms") {
    const MarkovModel k2 = make_k2();
    const PotentialKernel kernel = potential_kernel(k2);
    CHECK(kernel.u(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(kernel.u(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(kernel.u(1, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(kernel.u(1, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));

    const PotentialKernel pd = potential_kernel(pure_death());
    CHECK(pd.u.isApprox(Eigen::MatrixXd::Identity(2, 2), 1e-14));
}

TEST_CASE("potential kernel equals time quadrature of the density") {
    for (const MarkovModel& model : {make_k2(), make_k4()}) {
        const PotentialKernel kernel = potential_kernel(model);
        const double t_max = truncation_point(1.0, -model.spectral_bound(), 0,
                                              10.0 * model.size(), 1e-14);
        for (int x = 0; x < model.size(); ++x)
            for (int y = 0; y < model.size(); ++y) {
                const double q = integrate(
                    [&](double t) { return model.transition_density(t)(x, y); }, 0.0,
                    t_max, 1e-10, 1e-14);
                CHECK(q == doctest::Approx(kernel.u(x, y)).epsilon(1e-8));
            }
    }
}

TEST_CASE("sampled path lifetimes match the potential identity") {
    const MarkovModel k2 = make_k2();
    const PotentialKernel kernel = potential_kernel(k2);
    // E^a zeta = sum_y u(a,y) m_y = 1 for K2.
    const double expected = (kernel.u * k2.weights())(0);
    Rng rng(17);
    RunningStats stats;
    RunningStats first_to_b;
    for (int i = 0; i < 30000; ++i) {
        const Path path = sample_path(k2, 0, rng);
        stats.add(path.lifetime());
        first_to_b.add(path.sojourns.size() > 1 && path.sojourns[1].state == 1 ? 1.0
                                                                               : 0.0);
    }
    CHECK(std::abs(stats.z_against(expected)) <= 3.0);
    // Equal jump and kill rates: first move is to b with probability 1/2.
    CHECK(std::abs(first_to_b.z_against(0.5)) <= 3.0);
}

TEST_CASE("pure-death path is a single exponential sojourn") {
    const MarkovModel pd = pure_death();
    Rng rng(23);
    RunningStats stats;
    for (int i = 0; i < 20000; ++i) {
        const Path path = sample_path(pd, 0, rng);
        REQUIRE(path.sojourns.size() == 1);
        CHECK(path.sojourns[0].state == 0);
        stats.add(path.lifetime());
    }
    CHECK(std::abs(stats.z_against(1.0)) <= 3.0);
}

TEST_CASE("bridge: short duration pins the constant loop") {
    const MarkovModel k2 = make_k2();
    Uniformization uni(k2);
    Rng rng(31);
    int jumps = 0;
    for (int i = 0; i < 2000; ++i) {
        const Path path = sample_bridge(uni, 0, 0, 0.01, rng);
        if (path.sojourns.size() > 1) ++jumps;
        CHECK(path.sojourns.front().state == 0);
        CHECK(path.sojourns.back().state == 0);
        CHECK(path.lifetime() == doctest::Approx(0.01));
    }
    CHECK(jumps < 20);
}

TEST_CASE("bridge: jump-free frequency matches e^{-2}/p_1(a,a)") {
    const MarkovModel k2 = make_k2();
    Uniformization uni(k2);
    Rng rng(37);
    const double p1aa = 0.5 * (std::exp(-1.0) + std::exp(-3.0));
    const double expected = std::exp(-2.0) / p1aa;
    RunningStats stats;
    for (int i = 0; i < 30000; ++i) {
        const Path path = sample_bridge(uni, 0, 0, 1.0, rng);
        stats.add(path.sojourns.size() == 1 ? 1.0 : 0.0);
    }
    CHECK(std::abs(stats.z_against(expected)) <= 3.0);
}

TEST_CASE("bridge midpoint marginal matches the bridge density") {
    const MarkovModel k2 = make_k2();
    Uniformization uni(k2);
    Rng rng(41);
    const double t = 1.5;
    const int n_samples = 20000;
    // P(X_{t/2} = z | bridge a->a) = p(t/2)(a,z) p(t/2)(z,a) m_z / p_t(a,a).
    const Eigen::MatrixXd ph = k2.transition_density(t / 2.0);
    const double pt = k2.transition_density(t)(0, 0);
    std::vector<double> expected(2);
    for (int z = 0; z < 2; ++z) expected[z] = ph(0, z) * ph(z, 0) / pt * n_samples;

    std::vector<double> observed(2, 0.0);
    for (int i = 0; i < n_samples; ++i) {
        const Path path = sample_bridge(uni, 0, 0, t, rng);
        double elapsed = 0.0;
        int state = 0;
        for (const auto& s : path.sojourns) {
            state = s.state;
            elapsed += s.duration;
            if (elapsed > t / 2.0) break;
        }
        observed[state] += 1.0;
    }
    // Chi-squared with 1 dof at level 0.001 -> critical value 10.828.
    CHECK(chi2_statistic(observed, expected) < 10.828);
}

TEST_CASE("bridge underflow raises") {
    const MarkovModel k2 = make_k2();
    Uniformization uni(k2);
    Rng rng(43);
    CHECK_THROWS_AS(sample_bridge(uni, 0, 0, 5e4, rng), UnderflowBridge);
}

TEST_CASE("pure-death chain carries the positivity warning") {
    const MarkovModel pd = pure_death();
    REQUIRE(!pd.warnings().empty());
    CHECK(pd.warnings()[0].find("positive") != std::string::npos);
}
