#pragma once

#include <atomic>
#include <cstdint>
#include <string>
#include <thread>
#include <vector>

#include "permfield/lattice.hpp"
#include "permfield/loop.hpp"
#include "permfield/markov.hpp"
#include "permfield/measures.hpp"
#include "permfield/moments.hpp"

namespace permfield {

/// Exact E prod_j psihat_delta(nu_j) at lifetime cutoff delta: the partition
/// formula over blocks >= 2 with cutoff block moments. `measures` indexes the
/// base list; the tuple lists (possibly repeated) indices.
double psi_hat_moment_cutoff(const MarkovModel& model, double alpha,
                             const std::vector<SignedMeasure>& measures,
                             const std::vector<int>& tuple, double delta);

struct MomentCheckRow {
    std::vector<int> tuple;  // indices into the base measure list
    double delta = 0.0;
    double empirical = 0.0;
    double std_error = 0.0;
    double cutoff_exact = 0.0;
    double limit_exact = 0.0;
    double z_cutoff = 0.0;
    double z_limit = 0.0;
};

struct LoopCountRow {
    double delta = 0.0;
    double mean = 0.0;
    double std_error = 0.0;
    double expected = 0.0;
    double z = 0.0;
};

struct PermanentalMomentReport {
    std::vector<MomentCheckRow> rows;
    std::vector<LoopCountRow> counts;
    std::vector<std::string> failures;
    bool pass = false;
    std::uint64_t seed = 0;
    std::size_t soups = 0;
    std::vector<double> delta_schedule;
};

/// Loop-soup law and occupation-field moments against the exact engines.
/// One nested soup per realization is sampled at the smallest delta; the
/// restriction to {zeta > delta'} is a soup at delta' exactly in law.
/// Checks, per moment tuple: |z| <= 3 against the cutoff-exact value at every
/// delta; the deterministic cutoff bias strictly shrinking along the
/// schedule; |z| <= 3 against the delta->0 limit at the final delta.
PermanentalMomentReport verify_permanental_moments(
    const MarkovModel& model, double alpha, const std::vector<SignedMeasure>& measures,
    int max_order, std::size_t n_soups, std::vector<double> delta_schedule,
    std::uint64_t seed, int threads = 0);

struct IsomorphismMcRow {
    int degree = 0;
    double closed_form = 0.0;
    double mc_estimate = 0.0;
    double std_error = 0.0;
    double z = 0.0;
};

struct IsomorphismMcReport {
    std::vector<IsomorphismMcRow> rows;
    bool pass = false;
    std::uint64_t seed = 0;
    std::size_t soups = 0;
    double delta = 0.0;
};

/// RHS of the isomorphism identity estimated from sampled soups
/// ((1/alpha) E[theta F(psihat)]) against the closed-form LHS, for the
/// monomials x^0, x^1, ..., x^max_degree in a single measure.
IsomorphismMcReport verify_isomorphism_mc(const MarkovModel& model, double alpha,
                                          const SignedMeasure& rho,
                                          const SignedMeasure& phi,
                                          const SignedMeasure& nu, int max_degree,
                                          std::size_t n_soups, double delta,
                                          std::uint64_t seed, int threads = 0);

struct CafDemoRow {
    double delta = 0.0;      // physical translate distance (sites / N)
    double max_increment = 0.0;
    double omega = 0.0;
    double ratio = 0.0;      // max |L^{nu_x}_t - L^{nu_y}_t| / omega(delta)
};

struct CafDemoReport {
    std::vector<CafDemoRow> rows;
    std::size_t paths = 0;
    std::uint64_t seed = 0;
    bool diagnostic_only = true;  // the modulus constant is unspecified
};

/// Empirical modulus table for the translated-measure CAF field on the
/// 1-d torus walk. Diagnostic: no assertion is attached to the ratios.
CafDemoReport caf_field_demo(int N, double beta, const Eigen::VectorXd& nu_atoms,
                             std::size_t n_paths, const std::vector<double>& times,
                             const std::vector<int>& site_offsets, std::uint64_t seed);

/// Fixed-chunk parallel map: results are merged in chunk order, so the
/// outcome does not depend on the thread count.
template <typename T, typename Fn>
std::vector<T> run_chunks(int n_chunks, int threads, Fn fn) {
    if (threads <= 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, n_chunks);
    std::vector<T> results(n_chunks);
    std::atomic<int> next{0};
    auto worker = [&]() {
        while (true) {
            const int chunk = next.fetch_add(1);
            if (chunk >= n_chunks) break;
            results[chunk] = fn(chunk);
        }
    };
    std::vector<std::thread> pool;
    for (int i = 0; i < threads - 1; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return results;
}

}  // namespace permfield
