#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "permfield/markov.hpp"
#include "permfield/measures.hpp"
#include "permfield/moments.hpp"

namespace permfield {

/// One sample from mu restricted to {zeta > delta}: a rooted loop of the
/// stated lifetime whose path starts and ends at the root.
struct Loop {
    int root = 0;
    double lifetime = 0.0;
    Path path;
};

struct LoopSoup {
    double alpha = 0.0;
    double delta = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    std::vector<Loop> loops;
};

/// mu({zeta > delta}) = int_delta^inf (1/t) tr e^{tQ} dt.
double loop_mass(const MarkovModel& model, double delta, double rel_tol = 1e-9);

/// mu(1_{zeta>delta} L^nu_inf) = int_delta^inf sum_y p_t(y,y) nu({y}) dt.
double centering_term(const MarkovModel& model, const SignedMeasure& nu, double delta,
                      double rel_tol = 1e-9);

/// mu(1_{zeta>delta} prod_j L^{nu_j}_inf), the cutoff loop-measure moment.
/// The nested time integrals over the order simplex are evaluated per t as a
/// corner block of a block-bidiagonal matrix exponential, then integrated
/// over the lifetime. k = 0 falls back to loop_mass.
double mu_moment_cutoff(const MarkovModel& model, const std::vector<SignedMeasure>& nus,
                        double delta, double rel_tol = 1e-9);

/// Q_t^{x,y}( (prod_j L^{nu_j}_inf) o k_t ): the Lemma-style nested time
/// integral at fixed t (unnormalized bridge moment).
double bridge_moment(const MarkovModel& model, int x, int y, double t,
                     const std::vector<SignedMeasure>& nus);

/// E prod of centered/uncentered soup factors at lifetime cutoff delta:
/// the partition formula with every block moment taken under 1_{zeta>delta}.
double poisson_mixed_moment_cutoff(const MarkovModel& model, double alpha,
                                   const MomentSpec& spec, double delta);

/// Inverse-CDF sampler for the lifetime density proportional to
/// (1/t) tr e^{tQ} on (delta, T); T is chosen so the dropped tail is below
/// 1e-12 of the total mass.
class LifetimeSampler {
  public:
    LifetimeSampler(const MarkovModel& model, double delta);

    double total_mass() const { return total_; }
    double t_max() const { return knots_.back(); }
    double sample(Rng& rng) const;
    /// CDF of the sampled (piecewise-linear) law.
    double cdf(double t) const;

  private:
    std::vector<double> knots_;
    std::vector<double> cum_;
    double total_ = 0.0;
};

/// Draws whole soups: N ~ Poisson(alpha * mass), each loop independent with
/// the (1/t) tr density lifetime, diagonal-weighted root, and a pinned
/// bridge. Not thread-safe; create one per worker (samplers share nothing).
class SoupSampler {
  public:
    SoupSampler(const MarkovModel& model, double alpha, double delta);

    LoopSoup sample(Rng& rng);
    Loop sample_loop(Rng& rng);

    const LifetimeSampler& lifetimes() const { return lifetimes_; }
    double alpha() const { return alpha_; }
    double delta() const { return delta_; }

  private:
    const MarkovModel* model_;
    double alpha_;
    double delta_;
    LifetimeSampler lifetimes_;
    Uniformization uni_;
};

/// psi-hat(nu) = sum over soup loops of L^nu - alpha * mu(1_{zeta>delta} L^nu).
double occupation_field(const LoopSoup& soup, const SignedMeasure& nu,
                        const MarkovModel& model);
/// Fast path with a precomputed centering term.
double occupation_field(const LoopSoup& soup, const SignedMeasure& nu,
                        const Eigen::VectorXd& m, double centering);

/// theta^{rho,phi} = sum over soup loops of L^rho L^phi (rho, phi >= 0).
double theta_functional(const LoopSoup& soup, const SignedMeasure& rho,
                        const SignedMeasure& phi, const Eigen::VectorXd& m);

/// One loop per line: {"root":..,"lifetime":..,"skeleton":[..],"holds":[..]}.
std::string soup_to_jsonl(const LoopSoup& soup);
LoopSoup soup_from_jsonl(const std::string& text, double alpha, double delta);

}  // namespace permfield
