#include "permfield/moments.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>

#include "permfield/norms.hpp"

namespace permfield {

namespace {

void check_order(int n) {
    if (n > kMaxMomentOrder)
        throw TooLarge("moment order exceeds the exact-enumeration cap (10)");
}

/// Representative ids so identical measures share memoized cycle values.
std::vector<int> representative_ids(const std::vector<SignedMeasure>& nus) {
    std::vector<int> rep(nus.size());
    for (std::size_t i = 0; i < nus.size(); ++i) {
        rep[i] = static_cast<int>(i);
        for (std::size_t j = 0; j < i; ++j) {
            if (nus[i].atoms == nus[j].atoms) {
                rep[i] = rep[j];
                break;
            }
        }
    }
    return rep;
}

std::vector<int> canonical_rotation(const std::vector<int>& cycle) {
    const auto min_it = std::min_element(cycle.begin(), cycle.end());
    std::vector<int> rot;
    rot.reserve(cycle.size());
    rot.insert(rot.end(), min_it, cycle.end());
    rot.insert(rot.end(), cycle.begin(), min_it);
    return rot;
}

}  // namespace

Eigen::MatrixXd measure_kernel_matrix(const PotentialKernel& kernel,
                                      const SignedMeasure& nu) {
    return nu.atoms.asDiagonal() * kernel.u;
}

double cyclic_integral(const PotentialKernel& kernel,
                       const std::vector<SignedMeasure>& nus) {
    if (nus.empty()) throw std::invalid_argument("cyclic_integral: empty measure list");
    Eigen::MatrixXd prod = measure_kernel_matrix(kernel, nus[0]);
    for (std::size_t j = 1; j < nus.size(); ++j)
        prod = prod * measure_kernel_matrix(kernel, nus[j]);
    return prod.trace();
}

namespace {

/// Memoizing evaluator for per-cycle integrals, keyed by the canonical
/// rotation of the measure-index sequence along the cycle.
class CycleEvaluator {
  public:
    CycleEvaluator(const PotentialKernel& kernel, const std::vector<SignedMeasure>& nus)
        : rep_(representative_ids(nus)) {
        bs_.reserve(nus.size());
        for (const auto& nu : nus) bs_.push_back(measure_kernel_matrix(kernel, nu));
    }

    double operator()(const std::vector<int>& cycle) {
        std::vector<int> key = canonical_rotation(cycle);
        for (int& idx : key) idx = rep_[idx];
        const auto it = memo_.find(key);
        if (it != memo_.end()) return it->second;
        Eigen::MatrixXd prod = bs_[cycle[0]];
        for (std::size_t j = 1; j < cycle.size(); ++j) prod = prod * bs_[cycle[j]];
        const double v = prod.trace();
        memo_.emplace(std::move(key), v);
        return v;
    }

  private:
    std::vector<int> rep_;
    std::vector<Eigen::MatrixXd> bs_;
    std::map<std::vector<int>, double> memo_;
};

/// Cycles of pi, each listed from its smallest element, in order of smallest
/// elements (deterministic decomposition).
std::vector<std::vector<int>> cycle_decomposition(const std::vector<int>& pi) {
    const int n = static_cast<int>(pi.size());
    std::vector<bool> seen(n, false);
    std::vector<std::vector<int>> cycles;
    for (int j = 0; j < n; ++j) {
        if (seen[j]) continue;
        std::vector<int> cycle;
        int cur = j;
        while (!seen[cur]) {
            seen[cur] = true;
            cycle.push_back(cur);
            cur = pi[cur];
        }
        cycles.push_back(std::move(cycle));
    }
    return cycles;
}

}  // namespace

double alpha_permanental_moment(const PotentialKernel& kernel,
                                const std::vector<SignedMeasure>& nus, double alpha) {
    const int n = static_cast<int>(nus.size());
    check_order(n);
    if (n == 0) return 1.0;
    if (n == 1) return 0.0;  // E psi(nu) = 0

    CycleEvaluator cycle_value(kernel, nus);
    std::vector<int> pi(n);
    std::iota(pi.begin(), pi.end(), 0);
    long double total = 0.0L;
    do {
        bool fixed_point = false;
        for (int j = 0; j < n; ++j)
            if (pi[j] == j) {
                fixed_point = true;
                break;
            }
        if (fixed_point) continue;
        const auto cycles = cycle_decomposition(pi);
        long double term = std::pow(alpha, static_cast<double>(cycles.size()));
        for (const auto& c : cycles) term *= cycle_value(c);
        total += term;
    } while (std::next_permutation(pi.begin(), pi.end()));
    return static_cast<double>(total);
}

double permanental_process_moment(const PotentialKernel& kernel,
                                  const std::vector<int>& points, double alpha) {
    const int n = static_cast<int>(points.size());
    check_order(n);
    if (n == 0) return 1.0;
    std::vector<int> pi(n);
    std::iota(pi.begin(), pi.end(), 0);
    long double total = 0.0L;
    do {
        const auto cycles = cycle_decomposition(pi);
        long double term = std::pow(alpha, static_cast<double>(cycles.size()));
        for (int j = 0; j < n; ++j) term *= kernel.u(points[j], points[pi[j]]);
        total += term;
    } while (std::next_permutation(pi.begin(), pi.end()));
    return static_cast<double>(total);
}

double mu_moment(const PotentialKernel& kernel, const std::vector<SignedMeasure>& nus) {
    const int k = static_cast<int>(nus.size());
    if (k < 1) throw std::invalid_argument("mu_moment: need at least one measure");
    check_order(k);

    CycleEvaluator cycle_value(kernel, nus);
    std::vector<int> pi(k);
    std::iota(pi.begin(), pi.end(), 0);
    long double total = 0.0L;
    do {
        total += cycle_value(pi);
    } while (std::next_permutation(pi.begin(), pi.end()));
    return static_cast<double>(total / k);
}

double qxy_moment(const PotentialKernel& kernel, int x, int y,
                  const std::vector<SignedMeasure>& nus) {
    const int k = static_cast<int>(nus.size());
    check_order(k);
    if (k == 0) return kernel.u(x, y);

    std::vector<Eigen::MatrixXd> du(k);  // diag(nu_j) * U
    for (int j = 0; j < k; ++j) du[j] = nus[j].atoms.asDiagonal() * kernel.u;

    std::vector<int> pi(k);
    std::iota(pi.begin(), pi.end(), 0);
    long double total = 0.0L;
    do {
        Eigen::RowVectorXd row = kernel.u.row(x);
        for (int j = 0; j < k; ++j) row = row * du[pi[j]];
        total += row(y);
    } while (std::next_permutation(pi.begin(), pi.end()));
    return static_cast<double>(total);
}

namespace detail {

namespace {

void enumerate_partitions(int count, std::vector<int>& labels, int next_label, int i,
                          const std::function<void(const std::vector<int>&, int)>& visit) {
    if (i == count) {
        visit(labels, next_label);
        return;
    }
    for (int lab = 0; lab <= next_label; ++lab) {
        labels[i] = lab;
        enumerate_partitions(count, labels, std::max(next_label, lab + 1), i + 1, visit);
    }
}

}  // namespace

double partition_sum(int count,
                     const std::function<double(const std::vector<int>&)>& block_value,
                     const std::function<bool(int)>& singleton_allowed) {
    if (count == 0) return 1.0;
    long double total = 0.0L;
    std::vector<int> labels(count, 0);
    enumerate_partitions(
        count, labels, 0, 0, [&](const std::vector<int>& lab, int n_blocks) {
            std::vector<std::vector<int>> blocks(n_blocks);
            for (int i = 0; i < count; ++i) blocks[lab[i]].push_back(i);
            for (const auto& b : blocks)
                if (b.size() == 1 && !singleton_allowed(b[0])) return;
            long double prod = 1.0L;
            for (const auto& b : blocks) prod *= block_value(b);
            total += prod;
        });
    return static_cast<double>(total);
}

double mixed_moment_over(const MomentSpec& spec, double alpha,
                         const std::function<double(const std::vector<SignedMeasure>&)>&
                             block_mu) {
    const int n_groups = static_cast<int>(spec.groups.size());
    if (n_groups == 0) throw std::invalid_argument("empty moment spec");
    for (const auto& g : spec.groups)
        if (g.measures.empty()) throw std::invalid_argument("empty factor group");
    check_order(spec.total_factors());

    // Cache block moments by the bitmask of participating groups.
    std::map<std::uint32_t, double> cache;
    auto block_moment = [&](std::uint32_t mask) {
        const auto it = cache.find(mask);
        if (it != cache.end()) return it->second;
        std::vector<SignedMeasure> concat;
        for (int g = 0; g < n_groups; ++g)
            if (mask & (1u << g))
                for (const auto& nu : spec.groups[g].measures) concat.push_back(nu);
        const double v = alpha * block_mu(concat);
        cache.emplace(mask, v);
        return v;
    };

    std::vector<int> centered;
    std::vector<int> uncentered;
    for (int g = 0; g < n_groups; ++g)
        (spec.groups[g].centered ? centered : uncentered).push_back(g);

    // Expand each centered factor as (raw - mean) and apply the uncentered
    // partition formula to every resulting product of raw factors.
    long double total = 0.0L;
    const int nc = static_cast<int>(centered.size());
    for (std::uint32_t sub = 0; sub < (1u << nc); ++sub) {
        long double coeff = 1.0L;
        std::vector<int> remaining = uncentered;
        for (int i = 0; i < nc; ++i) {
            if (sub & (1u << i))
                coeff *= -block_moment(1u << centered[i]);  // minus the mean
            else
                remaining.push_back(centered[i]);
        }
        const double part = partition_sum(
            static_cast<int>(remaining.size()),
            [&](const std::vector<int>& block) {
                std::uint32_t mask = 0;
                for (int idx : block) mask |= 1u << remaining[idx];
                return block_moment(mask);
            },
            [](int) { return true; });
        total += coeff * part;
    }
    return static_cast<double>(total);
}

}  // namespace detail

double poisson_mixed_moment(const PotentialKernel& kernel, double alpha,
                            const MomentSpec& spec) {
    return detail::mixed_moment_over(
        spec, alpha,
        [&](const std::vector<SignedMeasure>& nus) { return mu_moment(kernel, nus); });
}

double q_rho_phi_moment(const PotentialKernel& kernel, const SignedMeasure& rho,
                        const SignedMeasure& phi, const std::vector<SignedMeasure>& nus) {
    if (!rho.is_nonnegative() || !phi.is_nonnegative())
        throw std::invalid_argument("q_rho_phi_moment: rho, phi must be >= 0");
    std::vector<SignedMeasure> all;
    all.reserve(nus.size() + 2);
    all.push_back(rho);
    all.push_back(phi);
    for (const auto& nu : nus) all.push_back(nu);
    return mu_moment(kernel, all);
}

namespace {

double binomial(int n, int k) {
    double c = 1.0;
    for (int i = 0; i < k; ++i) c = c * (n - i) / (i + 1);
    return c;
}

IsomorphismReport isomorphism_core(const PotentialKernel& lhs_kernel,
                                   const PotentialKernel& rhs_kernel, double alpha,
                                   const SignedMeasure& rho, const SignedMeasure& phi,
                                   const std::vector<SignedMeasure>& nus,
                                   const std::vector<int>& degrees, double rel_tol) {
    if (nus.size() != degrees.size())
        throw std::invalid_argument("isomorphism_check: measures/degrees mismatch");
    int total_degree = 0;
    for (int d : degrees) {
        if (d < 0) throw std::invalid_argument("negative degree");
        total_degree += d;
    }
    if (total_degree > 6) throw TooLarge("monomial degree exceeds 6");
    if (!rho.is_nonnegative() || !phi.is_nonnegative())
        throw std::invalid_argument("isomorphism_check: rho, phi must be >= 0");

    const PotentialKernel& kernel = lhs_kernel;
    const int m = static_cast<int>(nus.size());

    // LHS: expand prod_i (psi(nu_i)+L^{nu_i})^{d_i}; psi and the path are
    // independent, so each term factors into an alpha-permanental moment and
    // a Q^rho_phi moment.
    long double lhs = 0.0L;
    std::vector<int> a(m, 0);
    while (true) {
        double coeff = 1.0;
        for (int i = 0; i < m; ++i) coeff *= binomial(degrees[i], a[i]);
        std::vector<SignedMeasure> psi_part, l_part;
        for (int i = 0; i < m; ++i) {
            for (int r = 0; r < a[i]; ++r) psi_part.push_back(nus[i]);
            for (int r = 0; r < degrees[i] - a[i]; ++r) l_part.push_back(nus[i]);
        }
        lhs += coeff * alpha_permanental_moment(kernel, psi_part, alpha) *
               q_rho_phi_moment(kernel, rho, phi, l_part);
        int i = 0;
        while (i < m && a[i] == degrees[i]) a[i++] = 0;
        if (i == m) break;
        ++a[i];
    }

    // RHS: (1/alpha) E[theta^{rho,phi} prod psi(nu_i)^{d_i}].
    MomentSpec spec;
    spec.groups.push_back({{rho, phi}, false});
    for (int i = 0; i < m; ++i)
        for (int r = 0; r < degrees[i]; ++r) spec.groups.push_back({{nus[i]}, true});
    const double rhs = poisson_mixed_moment(rhs_kernel, alpha, spec) / alpha;

    IsomorphismReport report;
    report.lhs = static_cast<double>(lhs);
    report.rhs = rhs;
    report.abs_diff = std::abs(report.lhs - rhs);
    const double scale = std::max(std::abs(report.lhs), std::abs(rhs));
    report.rel_diff = scale > 0.0 ? report.abs_diff / scale : 0.0;
    report.pass = report.rel_diff <= rel_tol || report.abs_diff < 1e-14;
    return report;
}

}  // namespace

IsomorphismReport isomorphism_check(const MarkovModel& model, double alpha,
                                    const SignedMeasure& rho, const SignedMeasure& phi,
                                    const std::vector<SignedMeasure>& nus,
                                    const std::vector<int>& degrees, double rel_tol) {
    const PotentialKernel kernel = potential_kernel(model);
    return isomorphism_core(kernel, kernel, alpha, rho, phi, nus, degrees, rel_tol);
}

IsomorphismReport isomorphism_check_kernels(const PotentialKernel& lhs_kernel,
                                            const PotentialKernel& rhs_kernel,
                                            double alpha, const SignedMeasure& rho,
                                            const SignedMeasure& phi,
                                            const std::vector<SignedMeasure>& nus,
                                            const std::vector<int>& degrees,
                                            double rel_tol) {
    return isomorphism_core(lhs_kernel, rhs_kernel, alpha, rho, phi, nus, degrees,
                            rel_tol);
}

IsomorphismReport isomorphism_check_ii(const MarkovModel& model, double alpha,
                                       const SignedMeasure& rho, const SignedMeasure& phi,
                                       const std::vector<SignedMeasure>& nus,
                                       const std::vector<int>& degrees, double rel_tol) {
    const PotentialKernel kernel = potential_kernel(model);
    IsomorphismReport report =
        isomorphism_core(kernel, kernel, alpha, rho, phi, nus, degrees, rel_tol);
    report.rho_norm_zero = norm_zero(kernel, rho);
    report.phi_norm_u2_inf = norm_u2_inf(kernel, phi);
    if (!std::isfinite(report.rho_norm_zero) || !std::isfinite(report.phi_norm_u2_inf))
        throw std::invalid_argument("isomorphism_check_ii: rho/phi norms not finite");
    return report;
}

}  // namespace permfield
