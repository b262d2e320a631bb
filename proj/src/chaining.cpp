#include "permfield/chaining.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace permfield {

double j_functional(const Eigen::MatrixXd& distances, const Eigen::VectorXd& sigma,
                    double a, double metric_tol) {
    const int k = static_cast<int>(sigma.size());
    if (distances.rows() != k || distances.cols() != k)
        throw std::invalid_argument("j_functional: dimension mismatch");
    if (a < 0.0) throw std::invalid_argument("j_functional: a must be >= 0");
    if (std::abs(sigma.sum() - 1.0) > 1e-9 || (sigma.array() < 0.0).any())
        throw std::invalid_argument("j_functional: sigma must be a probability vector");

    for (int i = 0; i < k; ++i) {
        if (std::abs(distances(i, i)) > metric_tol)
            throw NotAMetric("nonzero diagonal");
        for (int j = 0; j < k; ++j) {
            if (distances(i, j) < -metric_tol) throw NotAMetric("negative distance");
            if (std::abs(distances(i, j) - distances(j, i)) > metric_tol)
                throw NotAMetric("asymmetric distances");
            for (int l = 0; l < k; ++l)
                if (distances(i, j) > distances(i, l) + distances(l, j) + metric_tol)
                    throw NotAMetric("triangle inequality fails");
        }
    }

    double best = 0.0;
    for (int i = 0; i < k; ++i) {
        // Ball weight around i jumps at the sorted distances to the others.
        std::vector<std::pair<double, double>> jumps;  // (radius, added mass)
        double w0 = 0.0;
        for (int j = 0; j < k; ++j) {
            if (distances(i, j) <= metric_tol)
                w0 += sigma(j);
            else
                jumps.emplace_back(distances(i, j), sigma(j));
        }
        std::sort(jumps.begin(), jumps.end());

        if (w0 <= 0.0 && a > 0.0) return std::numeric_limits<double>::infinity();
        double integral = 0.0;
        double w = w0;
        double r = 0.0;
        for (const auto& [radius, mass] : jumps) {
            const double upper = std::min(radius, a);
            if (upper > r) integral += (upper - r) * std::log(1.0 / w);
            r = upper;
            w += mass;
            if (r >= a) break;
        }
        if (a > r && w < 1.0) integral += (a - r) * std::log(1.0 / w);
        best = std::max(best, integral);
    }
    return best;
}

double orlicz_norm(const std::vector<double>& samples, double c_max) {
    if (samples.empty()) throw std::invalid_argument("orlicz_norm: no samples");
    double max_abs = 0.0;
    for (double x : samples) max_abs = std::max(max_abs, std::abs(x));
    if (max_abs == 0.0) return 0.0;

    auto excess = [&](double c) {
        double s = 0.0;
        for (double x : samples) {
            const double arg = std::abs(x) / c;
            if (arg > 700.0) return std::numeric_limits<double>::infinity();
            s += std::expm1(arg);
        }
        return s / static_cast<double>(samples.size());
    };

    // c_hi = max|x|/log 2 always satisfies the constraint pointwise.
    double hi = max_abs / std::log(2.0);
    if (hi > c_max) throw HeavyTail("Orlicz bisection exceeds c_max");
    double lo = hi / 2.0;
    while (excess(lo) <= 1.0) {
        hi = lo;
        lo /= 2.0;
        if (lo < 1e-300) return 0.0;
    }
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        (excess(mid) <= 1.0 ? hi : lo) = mid;
    }
    return hi;
}

}  // namespace permfield
