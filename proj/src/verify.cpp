#include "permfield/verify.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <thread>

#include "permfield/stats.hpp"

namespace permfield {

double psi_hat_moment_cutoff(const MarkovModel& model, double alpha,
                             const std::vector<SignedMeasure>& measures,
                             const std::vector<int>& tuple, double delta) {
    return detail::partition_sum(
        static_cast<int>(tuple.size()),
        [&](const std::vector<int>& block) {
            std::vector<SignedMeasure> nus;
            nus.reserve(block.size());
            for (int pos : block) nus.push_back(measures[tuple[pos]]);
            return alpha * mu_moment_cutoff(model, nus, delta);
        },
        [](int) { return false; });  // psihat factors are all centered
}

namespace {

/// Non-decreasing index tuples of sizes 2..max_order over `count` measures.
std::vector<std::vector<int>> moment_tuples(int count, int max_order) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur;
    std::function<void(int)> rec = [&](int min_idx) {
        if (cur.size() >= 2) out.push_back(cur);
        if (static_cast<int>(cur.size()) == max_order) return;
        for (int i = min_idx; i < count; ++i) {
            cur.push_back(i);
            rec(i);
            cur.pop_back();
        }
    };
    rec(0);
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.size() != b.size()) return a.size() < b.size();
        return a < b;
    });
    return out;
}

struct ChunkMoments {
    std::vector<std::vector<RunningStats>> products;  // [tuple][level]
    std::vector<RunningStats> counts;                 // [level]
};

}  // namespace

PermanentalMomentReport verify_permanental_moments(
    const MarkovModel& model, double alpha, const std::vector<SignedMeasure>& measures,
    int max_order, std::size_t n_soups, std::vector<double> delta_schedule,
    std::uint64_t seed, int threads) {
    if (max_order < 2 || max_order > 4)
        throw std::invalid_argument("moment order must be in [2,4]");
    std::sort(delta_schedule.begin(), delta_schedule.end(), std::greater<>());
    const double delta_min = delta_schedule.back();
    const int n_levels = static_cast<int>(delta_schedule.size());
    const int n_meas = static_cast<int>(measures.size());
    const auto tuples = moment_tuples(n_meas, max_order);
    const int n_tuples = static_cast<int>(tuples.size());

    std::vector<std::vector<double>> centerings(n_levels,
                                                std::vector<double>(n_meas, 0.0));
    for (int l = 0; l < n_levels; ++l)
        for (int i = 0; i < n_meas; ++i)
            centerings[l][i] = centering_term(model, measures[i], delta_schedule[l]);

    const int n_chunks = 128;
    const std::size_t per_chunk = (n_soups + n_chunks - 1) / n_chunks;
    auto chunk_results = run_chunks<ChunkMoments>(n_chunks, threads, [&](int chunk) {
        ChunkMoments acc;
        acc.products.assign(n_tuples, std::vector<RunningStats>(n_levels));
        acc.counts.assign(n_levels, RunningStats());
        Rng rng(seed, static_cast<std::uint64_t>(chunk));
        SoupSampler sampler(model, alpha, delta_min);
        const std::size_t lo = chunk * per_chunk;
        const std::size_t hi = std::min(n_soups, lo + per_chunk);
        std::vector<std::vector<double>> psi(n_levels, std::vector<double>(n_meas));
        for (std::size_t s = lo; s < hi; ++s) {
            const LoopSoup soup = sampler.sample(rng);
            for (int l = 0; l < n_levels; ++l)
                for (int i = 0; i < n_meas; ++i)
                    psi[l][i] = -alpha * centerings[l][i];
            std::vector<int> count(n_levels, 0);
            for (const auto& loop : soup.loops) {
                std::vector<double> caf(n_meas);
                for (int i = 0; i < n_meas; ++i)
                    caf[i] = caf_total(loop.path, measures[i], model.weights());
                for (int l = 0; l < n_levels; ++l) {
                    if (loop.lifetime <= delta_schedule[l]) continue;
                    ++count[l];
                    for (int i = 0; i < n_meas; ++i) psi[l][i] += caf[i];
                }
            }
            for (int l = 0; l < n_levels; ++l) {
                acc.counts[l].add(count[l]);
                for (int t = 0; t < n_tuples; ++t) {
                    double prod = 1.0;
                    for (int idx : tuples[t]) prod *= psi[l][idx];
                    acc.products[t][l].add(prod);
                }
            }
        }
        return acc;
    });

    // Merge in chunk order.
    std::vector<std::vector<RunningStats>> products(n_tuples,
                                                    std::vector<RunningStats>(n_levels));
    std::vector<RunningStats> counts(n_levels);
    for (const auto& c : chunk_results) {
        for (int t = 0; t < n_tuples; ++t)
            for (int l = 0; l < n_levels; ++l) products[t][l].merge(c.products[t][l]);
        for (int l = 0; l < n_levels; ++l) counts[l].merge(c.counts[l]);
    }

    PermanentalMomentReport report;
    report.seed = seed;
    report.soups = n_soups;
    report.delta_schedule = delta_schedule;

    for (int l = 0; l < n_levels; ++l) {
        LoopCountRow row;
        row.delta = delta_schedule[l];
        row.mean = counts[l].mean();
        row.std_error = counts[l].std_error();
        row.expected = alpha * loop_mass(model, delta_schedule[l]);
        row.z = counts[l].z_against(row.expected);
        if (std::abs(row.z) > 3.0)
            report.failures.push_back("loop count off at delta=" +
                                      std::to_string(row.delta));
        report.counts.push_back(row);
    }

    for (int t = 0; t < n_tuples; ++t) {
        std::vector<SignedMeasure> tuple_measures;
        for (int idx : tuples[t]) tuple_measures.push_back(measures[idx]);
        const double limit =
            alpha_permanental_moment(potential_kernel(model), tuple_measures, alpha);
        std::vector<double> biases;
        for (int l = 0; l < n_levels; ++l) {
            MomentCheckRow row;
            row.tuple = tuples[t];
            row.delta = delta_schedule[l];
            row.empirical = products[t][l].mean();
            row.std_error = products[t][l].std_error();
            row.cutoff_exact =
                psi_hat_moment_cutoff(model, alpha, measures, tuples[t], row.delta);
            row.limit_exact = limit;
            row.z_cutoff = products[t][l].z_against(row.cutoff_exact);
            row.z_limit = products[t][l].z_against(limit);
            biases.push_back(std::abs(row.cutoff_exact - limit));
            if (std::abs(row.z_cutoff) > 3.0)
                report.failures.push_back("moment z at delta=" + std::to_string(row.delta));
            if (l == n_levels - 1 && std::abs(row.z_limit) > 3.0)
                report.failures.push_back("limit moment z at final delta");
            report.rows.push_back(row);
        }
        for (int l = 1; l < n_levels; ++l)
            if (biases[l] > biases[l - 1] + 1e-14)
                report.failures.push_back("cutoff bias not shrinking");
    }

    report.pass = report.failures.empty();
    return report;
}

IsomorphismMcReport verify_isomorphism_mc(const MarkovModel& model, double alpha,
                                          const SignedMeasure& rho,
                                          const SignedMeasure& phi,
                                          const SignedMeasure& nu, int max_degree,
                                          std::size_t n_soups, double delta,
                                          std::uint64_t seed, int threads) {
    if (max_degree < 0 || max_degree > 2)
        throw std::invalid_argument("isomorphism MC degree must be 0..2");
    const double centering = centering_term(model, nu, delta);

    const int n_chunks = 128;
    const std::size_t per_chunk = (n_soups + n_chunks - 1) / n_chunks;
    auto chunk_results =
        run_chunks<std::vector<RunningStats>>(n_chunks, threads, [&](int chunk) {
            std::vector<RunningStats> acc(max_degree + 1);
            Rng rng(seed, static_cast<std::uint64_t>(chunk));
            SoupSampler sampler(model, alpha, delta);
            const std::size_t lo = chunk * per_chunk;
            const std::size_t hi = std::min(n_soups, lo + per_chunk);
            for (std::size_t s = lo; s < hi; ++s) {
                const LoopSoup soup = sampler.sample(rng);
                const double theta =
                    theta_functional(soup, rho, phi, model.weights());
                const double psi =
                    occupation_field(soup, nu, model.weights(), centering);
                double f = 1.0;
                for (int deg = 0; deg <= max_degree; ++deg) {
                    acc[deg].add(theta * f / alpha);
                    f *= psi;
                }
            }
            return acc;
        });

    std::vector<RunningStats> stats(max_degree + 1);
    for (const auto& c : chunk_results)
        for (int deg = 0; deg <= max_degree; ++deg) stats[deg].merge(c[deg]);

    IsomorphismMcReport report;
    report.seed = seed;
    report.soups = n_soups;
    report.delta = delta;
    bool ok = true;
    for (int deg = 0; deg <= max_degree; ++deg) {
        IsomorphismMcRow row;
        row.degree = deg;
        row.closed_form =
            isomorphism_check(model, alpha, rho, phi, {nu}, {deg}).lhs;
        row.mc_estimate = stats[deg].mean();
        row.std_error = stats[deg].std_error();
        row.z = stats[deg].z_against(row.closed_form);
        ok = ok && std::abs(row.z) <= 3.0;
        report.rows.push_back(row);
    }
    report.pass = ok;
    return report;
}

CafDemoReport caf_field_demo(int N, double beta, const Eigen::VectorXd& nu_atoms,
                             std::size_t n_paths, const std::vector<double>& times,
                             const std::vector<int>& site_offsets, std::uint64_t seed) {
    const MarkovModel model = lattice_walk_model(1, N, beta);
    const LatticeKernel kernel = LatticeKernel::rw(1, N, beta);
    const Eigen::VectorXd gamma = gamma_convolution(kernel);

    CafDemoReport report;
    report.paths = n_paths;
    report.seed = seed;

    std::vector<double> max_increment(site_offsets.size(), 0.0);
    Rng rng(seed);
    for (std::size_t p = 0; p < n_paths; ++p) {
        const Path path = sample_path(model, 0, rng);
        for (double t : times) {
            Eigen::VectorXd occ = Eigen::VectorXd::Zero(N);
            double elapsed = 0.0;
            for (const auto& s : path.sojourns) {
                const double dur = std::min(s.duration, t - elapsed);
                if (dur <= 0.0) break;
                occ(s.state) += dur;
                elapsed += s.duration;
                if (elapsed >= t) break;
            }
            // L^{nu_x}_t for every translate x (m = 1 on sites).
            Eigen::VectorXd l(N);
            for (int x = 0; x < N; ++x) {
                double acc = 0.0;
                for (int s = 0; s < N; ++s) acc += nu_atoms((s - x + N) % N) * occ(s);
                l(x) = acc;
            }
            for (std::size_t k = 0; k < site_offsets.size(); ++k) {
                const int off = site_offsets[k];
                for (int x = 0; x < N; ++x) {
                    for (int step = 1; step <= off; ++step) {
                        const double diff = std::abs(l(x) - l((x + step) % N));
                        max_increment[k] = std::max(max_increment[k], diff);
                    }
                }
            }
        }
    }

    for (std::size_t k = 0; k < site_offsets.size(); ++k) {
        CafDemoRow row;
        row.delta = static_cast<double>(site_offsets[k]) / N;
        row.max_increment = max_increment[k];
        row.omega = omega_delta(kernel, gamma, nu_atoms, row.delta);
        row.ratio = row.omega > 0.0 ? row.max_increment / row.omega : 0.0;
        report.rows.push_back(row);
    }
    return report;
}

}  // namespace permfield
