#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "permfield/measures.hpp"
#include "permfield/stats.hpp"
#include "test_helpers.hpp"

using namespace permfield;

namespace {

Path split_tail(const Path& path, double t) {
    // The path shifted by t (theta_t), for the additivity identity.
    Path tail;
    double elapsed = 0.0;
    for (const auto& s : path.sojourns) {
        if (elapsed + s.duration <= t) {
            elapsed += s.duration;
            continue;
        }
        const double offset = std::max(0.0, t - elapsed);
        tail.sojourns.push_back({s.state, s.duration - offset});
        elapsed += s.duration;
    }
    if (!tail.sojourns.empty()) tail.start = tail.sojourns.front().state;
    return tail;
}

}  // namespace

TEST_CASE("caf_total basics") {
    const MarkovModel k2 = make_k2();
    Path path;
    path.start = 0;
    path.sojourns = {{0, 0.7}, {1, 0.2}, {0, 0.4}};

    CHECK(caf_total(path, SignedMeasure::zero(2), k2.weights()) == 0.0);
    CHECK(caf_total(path, SignedMeasure::delta(2, 0), k2.weights()) ==
          doctest::Approx(1.1).epsilon(1e-15));

    // Pure-death style: a single sojourn of length s accumulates s.
    Path stay;
    stay.sojourns = {{0, 1.25}};
    CHECK(caf_total(stay, SignedMeasure::delta(2, 0), k2.weights()) ==
          doctest::Approx(1.25));
}

TEST_CASE("caf linearity and monotonicity are exact") {
    const MarkovModel k4 = make_k4();
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const Path path = sample_path(k4, 0, rng);
        const SignedMeasure nu1 = testutil::random_signed_measure(4, rng);
        const SignedMeasure nu2 = testutil::random_signed_measure(4, rng);
        const double a = rng.uniform(-2.0, 2.0), b = rng.uniform(-2.0, 2.0);
        const double combined = caf_total(path, nu1 * a + nu2 * b, k4.weights());
        const double split = a * caf_total(path, nu1, k4.weights()) +
                             b * caf_total(path, nu2, k4.weights());
        CHECK(combined == doctest::Approx(split).epsilon(1e-12));

        const SignedMeasure lower = nu1.abs();
        const SignedMeasure upper = lower + testutil::random_positive_measure(4, rng);
        CHECK(caf_total(path, lower, k4.weights()) <=
              caf_total(path, upper, k4.weights()));
    }
}

TEST_CASE("caf_at endpoints and additivity") {
    const MarkovModel k4 = make_k4();
    Rng rng(7);
    const SignedMeasure nu = testutil::random_signed_measure(4, rng);
    for (int trial = 0; trial < 50; ++trial) {
        const Path path = sample_path(k4, trial % 4, rng);
        CHECK(caf_at(path, nu, k4.weights(), 0.0) == 0.0);
        const double total = caf_total(path, nu, k4.weights());
        CHECK(caf_at(path, nu, k4.weights(), path.lifetime() + 1.0) ==
              doctest::Approx(total).epsilon(1e-12));

        // L_t + L_infty o theta_t = L_infty, exactly.
        const double t = rng.uniform(0.0, path.lifetime());
        const double head = caf_at(path, nu, k4.weights(), t);
        const double tail = caf_total(split_tail(path, t), nu, k4.weights());
        CHECK(head + tail == doctest::Approx(total).epsilon(1e-12));
    }
}

TEST_CASE("caf trace is nondecreasing for positive measures") {
    const MarkovModel k4 = make_k4();
    Rng rng(11);
    const SignedMeasure nu = testutil::random_positive_measure(4, rng);
    const Path path = sample_path(k4, 0, rng);
    const CAFTrace trace = caf_trace(path, nu, k4.weights());
    REQUIRE(trace.values.front() == 0.0);
    for (std::size_t i = 1; i < trace.values.size(); ++i)
        CHECK(trace.values[i] >= trace.values[i - 1]);
}

TEST_CASE("revuz potential closed forms") {
    const MarkovModel k2 = make_k2();
    const PotentialKernel kernel = potential_kernel(k2);

    const Eigen::VectorXd ua = revuz_potential(kernel, SignedMeasure::delta(2, 0));
    CHECK(ua(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(ua(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

    const Eigen::VectorXd diff = revuz_potential(
        kernel, SignedMeasure::delta(2, 0) - SignedMeasure::delta(2, 1));
    CHECK(diff(0) == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
    CHECK(diff(1) == doctest::Approx(-1.0 / 3.0).epsilon(1e-13));

    // Exact linearity.
    Rng rng(13);
    const SignedMeasure nu1 = testutil::random_signed_measure(2, rng);
    const SignedMeasure nu2 = testutil::random_signed_measure(2, rng);
    CHECK((revuz_potential(kernel, nu1 + nu2) -
           revuz_potential(kernel, nu1) - revuz_potential(kernel, nu2))
              .cwiseAbs()
              .maxCoeff() < 1e-14);
}

TEST_CASE("empirical CAF mean matches the Revuz identity") {
    const MarkovModel k2 = make_k2();
    const MarkovModel k4 = make_k4();
    Rng seeder(19);

    Rng r1(101);
    CHECK(verify_revuz(k2, SignedMeasure::delta(2, 0), 0, 20000, r1).pass);
    Rng r2(102);
    CHECK(verify_revuz(k2, SignedMeasure{Eigen::VectorXd::Ones(2)}, 0, 20000, r2).pass);
    Rng r3(103);
    CHECK(verify_revuz(k4, testutil::random_positive_measure(4, seeder), 1, 20000, r3)
              .pass);
}

TEST_CASE("verify_revuz input validation") {
    const MarkovModel k2 = make_k2();
    Rng rng(1);
    CHECK_THROWS_AS(
        verify_revuz(k2, SignedMeasure::delta(2, 0) - SignedMeasure::delta(2, 1), 0,
                     20000, rng),
        std::invalid_argument);
    CHECK_THROWS_AS(verify_revuz(k2, SignedMeasure::delta(2, 0), 0, 10, rng),
                    std::invalid_argument);
}
