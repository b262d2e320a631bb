#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "permfield/markov.hpp"
#include "permfield/measures.hpp"

namespace permfield {

/// ||nu||_{u^2,inf} = |nu|(S) v sup_x sum_y (u(x,y)^2 + u(y,x)^2) |nu|({y}).
double norm_u2_inf(const PotentialKernel& kernel, const SignedMeasure& nu);

/// ||nu||_0 = |nu|(S) v sup_x sum_y u(x,y) |nu|({y}).
double norm_zero(const PotentialKernel& kernel, const SignedMeasure& nu);

/// ||nu||_{(2)} = (sum_{x,y} (u(x,y)+u(y,x))^2 |nu|_x |nu|_y)^{1/2};
/// requires the symmetrized kernel to be positive semidefinite.
double norm_two_pd(const PotentialKernel& kernel, const SignedMeasure& nu,
                   double pd_tol = 1e-10);

/// ||nu||_{ubar} = |nu|(S) v sup_{y,z} |sum_x u(y,x) u(x,z) nu({x})|
/// (pi-proper, not known to be proper).
double norm_pi_ubar(const PotentialKernel& kernel, const SignedMeasure& nu);

/// w(x,y) = int_0^inf p_s(x,y)/sqrt(pi s) ds, the potential density of the
/// chain subordinated by the stable-1/2 subordinator. Returned as the matrix
/// W with w(x,y) = W_{xy}/m_y.
Eigen::MatrixXd w_half_matrix(const MarkovModel& model, double rel_tol = 1e-10);

/// ||nu||_w: L^2(m x m) norm of M_nu(x,z) = sum_y w(x,y) w(y,z) nu({y}).
/// Verifies the W^2 = U identity to ident_tol (relative) first.
double norm_w(const MarkovModel& model, const SignedMeasure& nu,
              double ident_tol = 1e-6);

/// Theta_l/Theta_r of the Phi-norm, via the Lyapunov linear systems
/// Q X + X Q^T = -diag(1/m) and Q^T Y + Y Q = -diag(1/m).
Eigen::MatrixXd theta_left_lyapunov(const MarkovModel& model);
Eigen::MatrixXd theta_right_lyapunov(const MarkovModel& model);

/// Same matrices by direct time quadrature (cross-route used in tests).
Eigen::MatrixXd theta_left_quadrature(const MarkovModel& model, double rel_tol = 1e-10);
Eigen::MatrixXd theta_right_quadrature(const MarkovModel& model, double rel_tol = 1e-10);

/// ||nu||_Phi = (sum_{x,y} Theta_l(x,y) Theta_r(x,y) nu_x nu_y)^{1/2}.
double norm_phi(const MarkovModel& model, const SignedMeasure& nu,
                double quad_form_tol = 1e-10);

enum class NormKind { u2_inf, zero, two_pd, w_norm, phi_norm, pi_ubar };

std::string norm_kind_name(NormKind kind);

/// Evaluator for a fixed model; precomputes whatever the kind needs.
std::function<double(const SignedMeasure&)> make_norm(NormKind kind,
                                                      const MarkovModel& model);

struct ProbeReport {
    struct TrialRow {
        int n = 0;
        int trial = 0;
        double ratio = 0.0;
    };

    std::vector<int> orders;            // n = 2..n_max
    std::vector<double> max_ratio;      // per n: max |cyclic| / prod ||nu_j||
    std::vector<double> c_fit;          // per n: max_ratio^{1/n}
    double fitted_c = 0.0;              // max over n
    bool stable = false;                // non-increasing beyond n=3 within 10%
    std::vector<TrialRow> trials;       // per-trial ratios for CSV reports
};

/// Draws random signed-measure tuples and bounds the proper-norm constant:
/// ratio_n = max |cyclic integral| / prod ||nu_j||. The pi-proper variant
/// symmetrizes over permutations and divides by n!. `extra` measures (if any)
/// are mixed into the trials so the probe majorizes their ratios too.
ProbeReport proper_constant_probe(const PotentialKernel& kernel,
                                  const std::function<double(const SignedMeasure&)>& norm,
                                  Rng& rng, int n_max, int trials,
                                  bool pi_variant = false,
                                  const std::vector<SignedMeasure>& extra = {});

/// Random signed measure for probes: atoms iid uniform on [-1,1], then with
/// probability 1/2 one of the signs is zeroed (one-signed case).
SignedMeasure random_probe_measure(int n, Rng& rng);

}  // namespace permfield
