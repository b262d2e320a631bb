#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace permfield {

/// Streaming mean/variance (Welford). Merge is associative, so chunked
/// parallel reductions give thread-count-independent results when chunks
/// are merged in a fixed order.
class RunningStats {
  public:
    void add(double x) {
        ++n_;
        const double d = x - mean_;
        mean_ += d / static_cast<double>(n_);
        m2_ += d * (x - mean_);
    }

    void merge(const RunningStats& o) {
        if (o.n_ == 0) return;
        if (n_ == 0) {
            *this = o;
            return;
        }
        const double na = static_cast<double>(n_), nb = static_cast<double>(o.n_);
        const double d = o.mean_ - mean_;
        mean_ += d * nb / (na + nb);
        m2_ += o.m2_ + d * d * na * nb / (na + nb);
        n_ += o.n_;
    }

    std::size_t count() const { return n_; }
    double mean() const { return mean_; }
    double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
    double stddev() const { return std::sqrt(variance()); }
    double std_error() const {
        return n_ > 0 ? stddev() / std::sqrt(static_cast<double>(n_)) : 0.0;
    }

    /// z-score of the sample mean against a target value.
    double z_against(double target) const {
        const double se = std_error();
        if (se == 0.0) return mean_ == target ? 0.0 : std::numeric_limits<double>::infinity();
        return (mean_ - target) / se;
    }

  private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

/// One-sample Kolmogorov-Smirnov test against a CDF evaluated at the sample
/// points. Returns the p-value from the asymptotic Kolmogorov distribution.
template <typename CdfFn>
double ks_test_pvalue(std::vector<double> samples, CdfFn cdf) {
    std::sort(samples.begin(), samples.end());
    const std::size_t n = samples.size();
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = cdf(samples[i]);
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
    }
    const double lambda = (std::sqrt(static_cast<double>(n)) + 0.12 + 0.11 / std::sqrt(static_cast<double>(n))) * d;
    // Q_KS(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2)
    double p = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        p += sign * term;
        if (term < 1e-16) break;
        sign = -sign;
    }
    return std::clamp(2.0 * p, 0.0, 1.0);
}

/// Pearson chi-squared statistic for observed counts against expected counts.
inline double chi2_statistic(const std::vector<double>& observed,
                             const std::vector<double>& expected) {
    double s = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        if (expected[i] > 0.0) {
            const double d = observed[i] - expected[i];
            s += d * d / expected[i];
        }
    }
    return s;
}

}  // namespace permfield
