#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/math/special_functions/expint.hpp>
#include <cmath>

#include "permfield/loop.hpp"
#include "permfield/stats.hpp"
#include "permfield/verify.hpp"
#include "test_helpers.hpp"

using namespace permfield;

namespace {

MarkovModel pure_death2() {
    ModelSpec spec;
    spec.states = {"a", "b"};
    spec.rates = Eigen::MatrixXd::Zero(2, 2);
    spec.kill = Eigen::VectorXd::Ones(2);
    spec.m = Eigen::VectorXd::Ones(2);
    return MarkovModel::build(spec);
}

}  // namespace

TEST_CASE("loop mass closed forms") {
    const MarkovModel pd = pure_death2();
    // tr e^{tQ} = 2 e^{-t}: mass = 2 E1(delta).
    for (double delta : {0.1, 0.5, 2.0}) {
        CHECK(loop_mass(pd, delta) ==
              doctest::Approx(2.0 * boost::math::expint(1, delta)).epsilon(1e-9));
    }

    const MarkovModel k2 = make_k2();
    // Independent Simpson oracle for (1/t)(e^-t + e^-3t) beyond delta=1.
    const double oracle = testutil::simpson(
        [](double t) { return (std::exp(-t) + std::exp(-3.0 * t)) / t; }, 1.0, 60.0,
        20000);
    CHECK(loop_mass(k2, 1.0) == doctest::Approx(oracle).epsilon(1e-8));

    CHECK(loop_mass(k2, 40.0) < 1e-15);
    CHECK(loop_mass(k2, 0.1) > loop_mass(k2, 0.2));
}

TEST_CASE("centering term: closed form, limit, linearity") {
    const MarkovModel k2 = make_k2();
    const SignedMeasure da = SignedMeasure::delta(2, 0);

    CHECK(centering_term(k2, SignedMeasure::zero(2), 1.0) == 0.0);
    CHECK(centering_term(k2, da, 1.0) ==
          doctest::Approx(std::exp(-1.0) / 2.0 + std::exp(-3.0) / 6.0).epsilon(1e-10));
    // delta -> 0 limit is the diagonal potential u(a,a) = 2/3.
    CHECK(centering_term(k2, da, 1e-9) == doctest::Approx(2.0 / 3.0).epsilon(1e-7));

    Rng rng(3);
    const SignedMeasure n1 = testutil::random_signed_measure(2, rng);
    const SignedMeasure n2 = testutil::random_signed_measure(2, rng);
    CHECK(centering_term(k2, n1 + n2, 0.3) ==
          doctest::Approx(centering_term(k2, n1, 0.3) + centering_term(k2, n2, 0.3))
              .epsilon(1e-10));
}

TEST_CASE("cutoff mu moments: brute-force simplex oracle and the k=1 case") {
    const MarkovModel k2 = make_k2();
    const SignedMeasure da = SignedMeasure::delta(2, 0);

    // k=2 identical atoms: mu(1_{zeta>delta} L^2) = int int_{s+w>delta} A(s)A(w),
    // A(r) = (e^-r + e^-3r)/2 (spectral form of (e^{rQ})_{aa}).
    auto a_fn = [](double r) { return 0.5 * (std::exp(-r) + std::exp(-3.0 * r)); };
    const int n = 3000;
    const double hi = 40.0, h = hi / n;
    double above = 0.0;
    const double delta = 0.5;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double s = (i + 0.5) * h, w = (j + 0.5) * h;
            if (s + w > delta) above += a_fn(s) * a_fn(w) * h * h;
        }
    CHECK(mu_moment_cutoff(k2, {da, da}, delta) ==
          doctest::Approx(above).epsilon(1e-3));

    // delta -> 0 recovers the limit moment.
    CHECK(mu_moment_cutoff(k2, {da, da}, 1e-7) ==
          doctest::Approx(4.0 / 9.0).epsilon(1e-5));

    // k = 1 is the centering term.
    CHECK(mu_moment_cutoff(k2, {da}, 0.7) ==
          doctest::Approx(centering_term(k2, da, 0.7)).epsilon(1e-12));
}

TEST_CASE("bridge moment: block-exponential vs direct convolution quadrature") {
    const MarkovModel k2 = make_k2();
    const SignedMeasure da = SignedMeasure::delta(2, 0);
    const double t = 1.3;
    // k=1: Q_t^{a,a}(L) = int_0^t (e^{rQ} D e^{(t-r)Q})_{aa} dr, D = diag(1,0).
    auto integrand = [&](double r) {
        const Eigen::MatrixXd left = k2.semigroup(r);
        const Eigen::MatrixXd right = k2.semigroup(t - r);
        return left(0, 0) * right(0, 0);
    };
    const double oracle = testutil::simpson(integrand, 0.0, t, 4000);
    CHECK(bridge_moment(k2, 0, 0, t, {da}) == doctest::Approx(oracle).epsilon(1e-8));
}

TEST_CASE("sampled bridge CAF moments match the nested time integrals") {
    const MarkovModel k2 = make_k2();
    const SignedMeasure da = SignedMeasure::delta(2, 0);
    const SignedMeasure db = SignedMeasure::delta(2, 1);
    Uniformization uni(k2);
    Rng rng(7);
    const double t = 1.1;
    const double mass = k2.semigroup(t)(0, 0);  // m = 1

    RunningStats m1, m2, m3;
    for (int i = 0; i < 30000; ++i) {
        const Path path = sample_bridge(uni, 0, 0, t, rng);
        const double la = caf_total(path, da, k2.weights());
        const double lb = caf_total(path, db, k2.weights());
        m1.add(la);
        m2.add(la * la);
        m3.add(la * la * lb);
    }
    CHECK(std::abs(m1.z_against(bridge_moment(k2, 0, 0, t, {da}) / mass)) <= 3.0);
    CHECK(std::abs(m2.z_against(bridge_moment(k2, 0, 0, t, {da, da}) / mass)) <= 3.0);
    CHECK(std::abs(m3.z_against(bridge_moment(k2, 0, 0, t, {da, da, db}) / mass)) <=
          3.0);
}

TEST_CASE("lifetime sampler: mass and KS goodness of fit") {
    const MarkovModel k2 = make_k2();
    const double delta = 0.05;
    LifetimeSampler sampler(k2, delta);
    CHECK(sampler.total_mass() == doctest::Approx(loop_mass(k2, delta)).epsilon(1e-6));

    Rng rng(11);
    std::vector<double> samples;
    for (int i = 0; i < 20000; ++i) samples.push_back(sampler.sample(rng));

    // CDF by quadrature of the (1/t) tr e^{tQ} density (independent route).
    const double total = loop_mass(k2, delta);
    auto cdf = [&](double t) {
        if (t <= delta) return 0.0;
        return (total - loop_mass(k2, t)) / total;
    };
    CHECK(ks_test_pvalue(samples, cdf) > 0.001);
}

TEST_CASE("soup law: counts, emptiness, field centering") {
    const MarkovModel k2 = make_k2();
    const double alpha = 1.0, delta = 0.1;
    SoupSampler sampler(k2, alpha, delta);
    Rng rng(13);

    const double expected = alpha * loop_mass(k2, delta);
    RunningStats counts;
    RunningStats psi_stats;
    const SignedMeasure da = SignedMeasure::delta(2, 0);
    const double centering = centering_term(k2, da, delta);
    for (int i = 0; i < 10000; ++i) {
        const LoopSoup soup = sampler.sample(rng);
        counts.add(static_cast<double>(soup.loops.size()));
        for (const auto& loop : soup.loops) {
            CHECK(loop.lifetime > delta);
            CHECK(loop.path.sojourns.front().state == loop.root);
            CHECK(loop.path.sojourns.back().state == loop.root);
        }
        psi_stats.add(occupation_field(soup, da, k2.weights(), centering));
    }
    CHECK(std::abs(counts.z_against(expected)) <= 3.0);
    CHECK(std::abs(psi_stats.z_against(0.0)) <= 3.0);

    // Variance against the exact cutoff second moment.
    const double var_exact = alpha * mu_moment_cutoff(k2, {da, da}, delta);
    CHECK(psi_stats.variance() ==
          doctest::Approx(var_exact).epsilon(0.05));

    // alpha -> 0: empty soups dominate.
    SoupSampler tiny(k2, 1e-3, delta);
    int empty = 0;
    for (int i = 0; i < 1000; ++i)
        if (tiny.sample(rng).loops.empty()) ++empty;
    CHECK(empty > 990);
}

TEST_CASE("theta functional basics and mean") {
    const MarkovModel k2 = make_k2();
    const SignedMeasure da = SignedMeasure::delta(2, 0);
    LoopSoup empty;
    empty.alpha = 1.0;
    CHECK(theta_functional(empty, da, da, k2.weights()) == 0.0);

    SoupSampler sampler(k2, 1.0, 0.05);
    Rng rng(17);
    RunningStats theta_stats;
    for (int i = 0; i < 10000; ++i) {
        const LoopSoup soup = sampler.sample(rng);
        theta_stats.add(theta_functional(soup, da, da, k2.weights()));
        CHECK(theta_stats.mean() >= 0.0);
    }
    const double expected = mu_moment_cutoff(k2, {da, da}, 0.05);
    CHECK(std::abs(theta_stats.z_against(expected)) <= 3.0);
    // Close to the delta -> 0 value alpha (1/2) 2! u(a,a)^2 = 4/9 already.
    CHECK(expected == doctest::Approx(4.0 / 9.0).epsilon(0.02));

    CHECK_THROWS_AS(
        theta_functional(empty, SignedMeasure::delta(2, 0) - SignedMeasure::delta(2, 1),
                         da, k2.weights()),
        std::invalid_argument);
}

TEST_CASE("poisson additivity: merged soups match the summed intensity") {
    const MarkovModel k2 = make_k2();
    const double delta = 0.1;
    const SignedMeasure da = SignedMeasure::delta(2, 0);
    const double centering = centering_term(k2, da, delta);

    SoupSampler s1(k2, 0.7, delta), s2(k2, 0.5, delta), s12(k2, 1.2, delta);
    Rng rng(19);
    RunningStats merged_n, direct_n, merged_psi2, direct_psi2;
    for (int i = 0; i < 8000; ++i) {
        LoopSoup a = s1.sample(rng);
        const LoopSoup b = s2.sample(rng);
        a.alpha = 1.2;
        for (const auto& loop : b.loops) a.loops.push_back(loop);
        merged_n.add(static_cast<double>(a.loops.size()));
        const double psi_m = occupation_field(a, da, k2.weights(), centering);
        merged_psi2.add(psi_m * psi_m);

        const LoopSoup c = s12.sample(rng);
        direct_n.add(static_cast<double>(c.loops.size()));
        const double psi_d = occupation_field(c, da, k2.weights(), centering);
        direct_psi2.add(psi_d * psi_d);
    }
    // Counts: same mean and (Poisson) variance.
    const double exp_n = 1.2 * loop_mass(k2, delta);
    CHECK(std::abs(merged_n.z_against(exp_n)) <= 3.0);
    CHECK(std::abs(direct_n.z_against(exp_n)) <= 3.0);
    // Second field moment agrees between the two constructions.
    const double exact2 = 1.2 * mu_moment_cutoff(k2, {da, da}, delta);
    CHECK(std::abs(merged_psi2.z_against(exact2)) <= 3.0);
    CHECK(std::abs(direct_psi2.z_against(exact2)) <= 3.0);
}

TEST_CASE("occupation field is exactly linear in the measure") {
    const MarkovModel k2 = make_k2();
    SoupSampler sampler(k2, 1.0, 0.1);
    Rng rng(23);
    const LoopSoup soup = sampler.sample(rng);
    const SignedMeasure n1 = testutil::random_signed_measure(2, rng);
    const SignedMeasure n2 = testutil::random_signed_measure(2, rng);
    const double c1 = centering_term(k2, n1, 0.1), c2 = centering_term(k2, n2, 0.1);
    const double sum = occupation_field(soup, n1 + n2, k2.weights(), c1 + c2);
    const double parts = occupation_field(soup, n1, k2.weights(), c1) +
                         occupation_field(soup, n2, k2.weights(), c2);
    CHECK(sum == doctest::Approx(parts).epsilon(1e-12));
    CHECK(occupation_field(soup, SignedMeasure::zero(2), k2.weights(), 0.0) == 0.0);
}

TEST_CASE("soup JSONL round trip") {
    const MarkovModel k2 = make_k2();
    SoupSampler sampler(k2, 1.0, 0.1);
    Rng rng(29);
    const LoopSoup soup = sampler.sample(rng);
    const std::string text = soup_to_jsonl(soup);
    const LoopSoup parsed = soup_from_jsonl(text, soup.alpha, soup.delta);
    REQUIRE(parsed.loops.size() == soup.loops.size());
    for (std::size_t i = 0; i < soup.loops.size(); ++i) {
        CHECK(parsed.loops[i].root == soup.loops[i].root);
        CHECK(parsed.loops[i].lifetime == soup.loops[i].lifetime);
        REQUIRE(parsed.loops[i].path.sojourns.size() ==
                soup.loops[i].path.sojourns.size());
        for (std::size_t j = 0; j < soup.loops[i].path.sojourns.size(); ++j) {
            CHECK(parsed.loops[i].path.sojourns[j].state ==
                  soup.loops[i].path.sojourns[j].state);
            CHECK(parsed.loops[i].path.sojourns[j].duration ==
                  soup.loops[i].path.sojourns[j].duration);
        }
    }
}
