#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "permfield/chaining.hpp"
#include "permfield/rng.hpp"

using namespace permfield;

namespace {

/// Brute-force Riemann evaluation of J(a) on a fine grid.
double j_riemann(const Eigen::MatrixXd& d, const Eigen::VectorXd& sigma, double a,
                 int grid = 10000) {
    const int k = static_cast<int>(sigma.size());
    double best = 0.0;
    for (int i = 0; i < k; ++i) {
        double integral = 0.0;
        for (int g = 0; g < grid; ++g) {
            const double r = a * (g + 0.5) / grid;
            double w = 0.0;
            for (int j = 0; j < k; ++j)
                if (d(i, j) <= r) w += sigma(j);
            integral += std::log(1.0 / w) * a / grid;
        }
        best = std::max(best, integral);
    }
    return best;
}

Eigen::MatrixXd metric_from_points(const std::vector<double>& xs) {
    const int k = static_cast<int>(xs.size());
    Eigen::MatrixXd d(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) d(i, j) = std::abs(xs[i] - xs[j]);
    return d;
}

}  // namespace

TEST_CASE("j functional closed forms") {
    // Single point: the ball always has full mass.
    CHECK(j_functional(Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Ones(1), 2.5) ==
          0.0);

    // Two points at distance 1, equal weights: J(a) = min(a,1) log 2.
    Eigen::MatrixXd d2(2, 2);
    d2 << 0, 1, 1, 0;
    Eigen::VectorXd s2 = Eigen::VectorXd::Constant(2, 0.5);
    for (double a : {0.25, 1.0, 3.0})
        CHECK(j_functional(d2, s2, a) ==
              doctest::Approx(std::min(a, 1.0) * std::log(2.0)).epsilon(1e-14));

    // k points, uniform sigma, all mutual distances 1: min(a,1) log k.
    for (int k : {3, 5}) {
        Eigen::MatrixXd d = Eigen::MatrixXd::Ones(k, k);
        d.diagonal().setZero();
        Eigen::VectorXd s = Eigen::VectorXd::Constant(k, 1.0 / k);
        for (double a : {0.5, 2.0})
            CHECK(j_functional(d, s, a) ==
                  doctest::Approx(std::min(a, 1.0) * std::log(double(k)))
                      .epsilon(1e-14));
    }
}

TEST_CASE("j functional equals brute-force integration on random families") {
    Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        const int k = 3 + static_cast<int>(rng.uniform() * 5);
        std::vector<double> xs;
        for (int i = 0; i < k; ++i) xs.push_back(rng.uniform(0.0, 2.0));
        const Eigen::MatrixXd d = metric_from_points(xs);
        Eigen::VectorXd sigma(k);
        double total = 0.0;
        for (int i = 0; i < k; ++i) total += (sigma(i) = rng.uniform(0.05, 1.0));
        sigma /= total;
        const double a = rng.uniform(0.2, 2.5);
        CHECK(j_functional(d, sigma, a) ==
              doctest::Approx(j_riemann(d, sigma, a)).epsilon(1e-5));
    }
}

TEST_CASE("j functional rejects non-metrics") {
    Eigen::MatrixXd bad(3, 3);
    bad << 0, 1, 5, 1, 0, 1, 5, 1, 0;  // 5 > 1 + 1
    CHECK_THROWS_AS(
        j_functional(bad, Eigen::VectorXd::Constant(3, 1.0 / 3.0), 1.0),
        NotAMetric);

    Eigen::MatrixXd asym(2, 2);
    asym << 0, 1, 2, 0;
    CHECK_THROWS_AS(
        j_functional(asym, Eigen::VectorXd::Constant(2, 0.5), 1.0), NotAMetric);
}

TEST_CASE("orlicz norm: constants, zero, scaling, monotonicity") {
    // Constant samples v: solve E e^{v/c} - 1 = 1 -> c = v / log 2.
    const std::vector<double> constant(2000, 1.7);
    CHECK(orlicz_norm(constant) == doctest::Approx(1.7 / std::log(2.0)).epsilon(1e-10));

    const std::vector<double> zeros(2000, 0.0);
    CHECK(orlicz_norm(zeros) == 0.0);

    Rng rng(5);
    std::vector<double> samples, doubled;
    for (int i = 0; i < 5000; ++i) {
        samples.push_back(rng.normal());
        doubled.push_back(2.0 * samples.back());
    }
    CHECK(orlicz_norm(doubled) ==
          doctest::Approx(2.0 * orlicz_norm(samples)).epsilon(1e-9));

    std::vector<double> bigger = samples;
    for (double& x : bigger) x = std::abs(x) + 0.2;
    CHECK(orlicz_norm(bigger) >= orlicz_norm(samples));
}
