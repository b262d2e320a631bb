#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "permfield/markov.hpp"
#include "permfield/measures.hpp"

namespace permfield {

/// Hard cap for the exact enumeration engines (10! permutations).
inline constexpr int kMaxMomentOrder = 10;

/// (B_nu)_{xy} = nu({x}) u(x,y); every moment formula reduces to traces and
/// chains of these.
Eigen::MatrixXd measure_kernel_matrix(const PotentialKernel& kernel,
                                      const SignedMeasure& nu);

/// Integral of u(x_1,x_2) u(x_2,x_3) ... u(x_n,x_1) against d nu_1 ... d nu_n,
/// i.e. tr(B_{nu_1} ... B_{nu_n}). Invariant under cyclic rotation.
double cyclic_integral(const PotentialKernel& kernel,
                       const std::vector<SignedMeasure>& nus);

/// E prod_j psi(nu_j) for the alpha-permanental field: sum over fixed-point-
/// free permutations of alpha^{#cycles} times the per-cycle integrals.
/// n = 1 returns 0 (the field is centered); n = 0 returns 1.
double alpha_permanental_moment(const PotentialKernel& kernel,
                                const std::vector<SignedMeasure>& nus, double alpha);

/// E prod_j theta_{x_j} for an alpha-permanental process with bounded kernel:
/// the same sum over all permutations, fixed points included.
double permanental_process_moment(const PotentialKernel& kernel,
                                  const std::vector<int>& points, double alpha);

/// mu(prod_j L^{nu_j}_inf) = (1/k) sum over all permutations of the rotated
/// cyclic integrals. k = 1 gives sum_y u(y,y) nu({y}).
double mu_moment(const PotentialKernel& kernel, const std::vector<SignedMeasure>& nus);

/// Q^{x,y}(prod_j L^{nu_j}_inf): permutation sum of u-chains from x to y.
/// k = 0 returns u(x,y) (the mass of Q^{x,y}).
double qxy_moment(const PotentialKernel& kernel, int x, int y,
                  const std::vector<SignedMeasure>& nus);

/// One factor of a Poisson-functional moment: the per-loop product of the
/// group's CAF totals, optionally centered by its mean over the soup.
struct FactorGroup {
    std::vector<SignedMeasure> measures;
    bool centered = false;
};

struct MomentSpec {
    std::vector<FactorGroup> groups;

    int total_factors() const {
        int k = 0;
        for (const auto& g : groups) k += static_cast<int>(g.measures.size());
        return k;
    }
};

/// E prod_g (soup sum of the group's product, centered where flagged), in the
/// delta -> 0 limit. Centered factors are expanded by inclusion-exclusion
/// over their means and the uncentered partition formula is applied.
double poisson_mixed_moment(const PotentialKernel& kernel, double alpha,
                            const MomentSpec& spec);

/// Q^rho_phi(prod_j L^{nu_j}) = mu(L^rho L^phi prod_j L^{nu_j}).
double q_rho_phi_moment(const PotentialKernel& kernel, const SignedMeasure& rho,
                        const SignedMeasure& phi, const std::vector<SignedMeasure>& nus);

struct IsomorphismReport {
    double lhs = 0.0;
    double rhs = 0.0;
    double abs_diff = 0.0;
    double rel_diff = 0.0;
    bool pass = false;
    // Norm values attached by the theorem-II variant.
    double rho_norm_zero = 0.0;
    double phi_norm_u2_inf = 0.0;
};

/// Both sides of E Q^rho_phi(F(psi(nu_i)+L^{nu_i})) = (1/alpha) E(theta F(psi))
/// for the monomial F = prod_i x_i^{degree_i}. The left side is expanded
/// binomially into independent psi-moments and Q^rho_phi L-moments; the right
/// side through the Poisson partition formula. Q^rho_phi is treated as the
/// literal (finite, non-probability) measure integral.
IsomorphismReport isomorphism_check(const MarkovModel& model, double alpha,
                                    const SignedMeasure& rho, const SignedMeasure& phi,
                                    const std::vector<SignedMeasure>& nus,
                                    const std::vector<int>& degrees,
                                    double rel_tol = 1e-9);

/// The same comparison with explicit kernels per side (fault-injection and
/// sensitivity studies: a perturbed LHS kernel must break the identity).
IsomorphismReport isomorphism_check_kernels(const PotentialKernel& lhs_kernel,
                                            const PotentialKernel& rhs_kernel,
                                            double alpha, const SignedMeasure& rho,
                                            const SignedMeasure& phi,
                                            const std::vector<SignedMeasure>& nus,
                                            const std::vector<int>& degrees,
                                            double rel_tol = 1e-9);

/// Same identity under the Theorem-II hypotheses: rho, phi are validated
/// against ||.||_0 and ||.||_{u^2,inf} finiteness and the values attached.
IsomorphismReport isomorphism_check_ii(const MarkovModel& model, double alpha,
                                       const SignedMeasure& rho, const SignedMeasure& phi,
                                       const std::vector<SignedMeasure>& nus,
                                       const std::vector<int>& degrees,
                                       double rel_tol = 1e-9);

namespace detail {

/// Sum over set partitions of [0,count) of prod_blocks block_value(block),
/// with an optional per-partition admissibility filter on singleton blocks.
/// Exposed for the loop-engine's cutoff variant.
double partition_sum(int count,
                     const std::function<double(const std::vector<int>&)>& block_value,
                     const std::function<bool(int)>& singleton_allowed);

double mixed_moment_over(const MomentSpec& spec, double alpha,
                         const std::function<double(const std::vector<SignedMeasure>&)>&
                             block_mu);

}  // namespace detail

}  // namespace permfield
