#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "permfield/markov.hpp"

namespace permfield {

/// Exponentially killed Levy kernel on the discrete torus Z_N^d, held on the
/// Fourier side: kappa = beta + kappa_bar, u_hat = 1/kappa.
///
/// Conventions (recorded in every report): the torus has unit physical
/// circumference with N sites per axis; characters are e^{2 pi i xi.x / N};
/// the forward DFT is the unnormalized sum, the inverse carries 1/N^d. The
/// radial frequency coordinate is the chord momentum
///   q_i(xi) = (N/pi) sin(pi xi_i / N),
/// which matches the integer frequency on low modes and is alias-free at the
/// Nyquist edge.
class LatticeKernel {
  public:
    /// Nearest-neighbour walk: per-direction symmetric jump rate `rate`
    /// (default N^2, the continuum normalization on the unit torus) plus an
    /// optional extra one-directional rate per axis (`drift`).
    static LatticeKernel rw(int d, int N, double beta, double rate = -1.0,
                            std::vector<double> drift = {});

    /// kappa_bar = (scale * sum_i q_i^2)^{alpha/2}; scale defaults to 4 pi^2
    /// so alpha = 2 coincides with the default rw kernel.
    static LatticeKernel stable_surrogate(int d, int N, double beta, double alpha,
                                          double scale = -1.0);

    static LatticeKernel from_table(int d, int N, double beta,
                                    Eigen::VectorXcd kappa_bar);

    int dim() const { return d_; }
    int side() const { return n_; }
    int points() const { return points_; }
    double beta() const { return beta_; }

    const Eigen::VectorXcd& kappa_bar() const { return kappa_bar_; }
    std::complex<double> kappa(int idx) const { return beta_ + kappa_bar_(idx); }
    const Eigen::VectorXd& u_hat_abs() const { return u_hat_abs_; }
    std::complex<double> u_hat(int idx) const { return 1.0 / kappa(idx); }

    /// Per-axis frequencies of a flat index, each in [0, N).
    std::vector<int> unravel(int idx) const;
    /// |q(xi)|, the chord momentum radius.
    double chord_radius(int idx) const { return chord_radius_(idx); }
    double max_chord_radius() const { return chord_radius_.maxCoeff(); }

    /// Real-space potential u(z) = IDFT(u_hat), a real vector on the sites.
    Eigen::VectorXd potential_real() const;

    /// Dense potential kernel u(x,y) = u((y-x) mod N) with counting weights,
    /// for the state-space engines (probes, moments).
    PotentialKernel dense_potential() const;

  private:
    LatticeKernel(int d, int N, double beta, Eigen::VectorXcd kappa_bar);

    int d_ = 1;
    int n_ = 1;
    int points_ = 1;
    double beta_ = 1.0;
    Eigen::VectorXcd kappa_bar_;
    Eigen::VectorXd u_hat_abs_;
    Eigen::VectorXd chord_radius_;
};

/// Forward DFT (unnormalized sum) / inverse DFT (with 1/N^d) on the torus.
Eigen::VectorXcd dft_forward(const Eigen::VectorXcd& in, int d, int N);
Eigen::VectorXcd dft_inverse(const Eigen::VectorXcd& in, int d, int N);

/// gamma = |u_hat| circularly convolved with itself (via FFT).
Eigen::VectorXd gamma_convolution(const LatticeKernel& kernel);

/// ||nu||_{gamma,2} = ( (1/N^{2d}) sum_xi |nu_hat(xi)|^2 gamma(xi) )^{1/2}.
/// With this normalization the proper-norm constant from the chain
/// Cauchy-Schwarz argument is exactly 1.
double norm_gamma2(const LatticeKernel& kernel, const Eigen::VectorXd& gamma,
                   const Eigen::VectorXd& nu_atoms);

struct SectorialNorm {
    double value = 0.0;
    double sectorial_constant = 0.0;  // max |Im kappa| / Re kappa
    bool sectorial_ok = false;        // constant < 1
};

/// ||nu||_[2] = (sum_{x,y} u(x-y) u(y-x) nu_x nu_y)^{1/2}, computed
/// spectrally, together with the sectorial constant.
SectorialNorm norm_sect2(const LatticeKernel& kernel, const Eigen::VectorXd& nu_atoms);

/// Discrete (b101) diagnostic: dyadic shells x_j = 2^j up to the Nyquist
/// radius of sqrt(tail mass above x_j) * log-width.
double b101_integral(const LatticeKernel& kernel, const Eigen::VectorXd& gamma,
                     const Eigen::VectorXd& nu_atoms);

/// phi(delta): low modes enter as delta^2 |lambda|^2, high modes whole, with
/// lambda(xi) = 2 pi |q(xi)| and the split at |lambda| = 1/delta.
double phi_delta(const LatticeKernel& kernel, const Eigen::VectorXd& gamma,
                 const Eigen::VectorXd& nu_atoms, double delta);

/// omega(delta) = phi(delta) log(1/delta) + int_0^delta phi(u)/u du.
/// phi is exactly linear below 1/(2 pi q_max), so the integral's head is
/// closed-form and the remainder is quadrature on a log grid.
double omega_delta(const LatticeKernel& kernel, const Eigen::VectorXd& gamma,
                   const Eigen::VectorXd& nu_atoms, double delta);

struct TauFit {
    double slope = 0.0;
    double intercept = 0.0;        // log tau(q) ~ intercept + slope log q
    double residual_band = 0.0;    // max |residual| over the fit band
    double lemma71_premise = 0.0;  // max |q|^d / (|kappa|^2 gamma)
    double lemma73_bound = 0.0;    // max gamma tau(q)^2 / |q|^d over the band
    double lemma73a_constant = 0.0;
};

/// Log-log regression of |kappa| against |q| over the outer half of the
/// spectrum, plus the fitted constants of the spectral lemmas.
TauFit tau_fit(const LatticeKernel& kernel, const Eigen::VectorXd& gamma);

/// The rw kernels correspond to an honest finite-state chain; expose it for
/// path simulation (CAF field demos).
MarkovModel lattice_walk_model(int d, int N, double beta, double rate = -1.0,
                               std::vector<double> drift = {});

}  // namespace permfield
