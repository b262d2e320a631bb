#include "permfield/lattice.hpp"

#include <fftw3.h>

#include <cmath>
#include <numbers>

#include "permfield/quadrature.hpp"

namespace permfield {

namespace {

constexpr double kPi = std::numbers::pi;

int ipow(int base, int exp) {
    int v = 1;
    for (int i = 0; i < exp; ++i) v *= base;
    return v;
}

}  // namespace

LatticeKernel::LatticeKernel(int d, int N, double beta, Eigen::VectorXcd kappa_bar)
    : d_(d), n_(N), points_(ipow(N, d)), beta_(beta), kappa_bar_(std::move(kappa_bar)) {
    if (d < 1 || d > 3) throw std::invalid_argument("lattice dimension must be 1..3");
    if (N < 2) throw std::invalid_argument("torus side must be >= 2");
    if (!(beta > 0.0)) throw std::invalid_argument("killing rate beta must be > 0");
    if (kappa_bar_.size() != points_)
        throw std::invalid_argument("kappa_bar size mismatch");
    if (std::abs(kappa_bar_(0)) > 1e-12)
        throw std::invalid_argument("kappa_bar(0) must vanish");
    for (int i = 0; i < points_; ++i)
        if (kappa_bar_(i).real() < -1e-12)
            throw std::invalid_argument("Re kappa_bar must be >= 0");

    u_hat_abs_.resize(points_);
    chord_radius_.resize(points_);
    for (int i = 0; i < points_; ++i) {
        u_hat_abs_(i) = std::abs(1.0 / (beta_ + kappa_bar_(i)));
        const auto xs = unravel(i);
        double q2 = 0.0;
        for (int a = 0; a < d_; ++a) {
            const double q = (n_ / kPi) * std::sin(kPi * xs[a] / n_);
            q2 += q * q;
        }
        chord_radius_(i) = std::sqrt(q2);
    }
}

std::vector<int> LatticeKernel::unravel(int idx) const {
    std::vector<int> xs(d_);
    for (int a = d_ - 1; a >= 0; --a) {
        xs[a] = idx % n_;
        idx /= n_;
    }
    return xs;
}

LatticeKernel LatticeKernel::rw(int d, int N, double beta, double rate,
                                std::vector<double> drift) {
    if (rate < 0.0) rate = static_cast<double>(N) * N;
    if (drift.empty()) drift.assign(d, 0.0);
    if (static_cast<int>(drift.size()) != d)
        throw std::invalid_argument("drift size must match dimension");
    const int points = ipow(N, d);
    Eigen::VectorXcd kb(points);
    for (int i = 0; i < points; ++i) {
        int rem = i;
        std::vector<int> xs(d);
        for (int a = d - 1; a >= 0; --a) {
            xs[a] = rem % N;
            rem /= N;
        }
        std::complex<double> v = 0.0;
        for (int a = 0; a < d; ++a) {
            const double theta = 2.0 * kPi * xs[a] / N;
            v += rate * 2.0 * (1.0 - std::cos(theta));
            v += drift[a] * (1.0 - std::complex<double>(std::cos(theta), std::sin(theta)));
        }
        kb(i) = v;
    }
    return LatticeKernel(d, N, beta, std::move(kb));
}

LatticeKernel LatticeKernel::stable_surrogate(int d, int N, double beta, double alpha,
                                              double scale) {
    if (!(alpha > 0.0) || alpha > 2.0)
        throw std::invalid_argument("stable index must be in (0,2]");
    if (scale < 0.0) scale = 4.0 * kPi * kPi;
    const int points = ipow(N, d);
    Eigen::VectorXcd kb(points);
    for (int i = 0; i < points; ++i) {
        int rem = i;
        double q2 = 0.0;
        for (int a = d - 1; a >= 0; --a) {
            const int x = rem % N;
            rem /= N;
            const double q = (N / kPi) * std::sin(kPi * x / N);
            q2 += q * q;
        }
        kb(i) = std::pow(scale * q2, alpha / 2.0);
    }
    return LatticeKernel(d, N, beta, std::move(kb));
}

LatticeKernel LatticeKernel::from_table(int d, int N, double beta,
                                        Eigen::VectorXcd kappa_bar) {
    return LatticeKernel(d, N, beta, std::move(kappa_bar));
}

namespace {

Eigen::VectorXcd dft_impl(const Eigen::VectorXcd& in, int d, int N, int sign) {
    const int points = ipow(N, d);
    if (in.size() != points) throw std::invalid_argument("dft: size mismatch");
    Eigen::VectorXcd out(points);
    std::vector<int> dims(d, N);
    fftw_plan plan = fftw_plan_dft(
        d, dims.data(),
        reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in.data())),
        reinterpret_cast<fftw_complex*>(out.data()), sign, FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    return out;
}

}  // namespace

Eigen::VectorXcd dft_forward(const Eigen::VectorXcd& in, int d, int N) {
    return dft_impl(in, d, N, FFTW_FORWARD);
}

Eigen::VectorXcd dft_inverse(const Eigen::VectorXcd& in, int d, int N) {
    Eigen::VectorXcd out = dft_impl(in, d, N, FFTW_BACKWARD);
    out /= static_cast<double>(ipow(N, d));
    return out;
}

Eigen::VectorXd gamma_convolution(const LatticeKernel& kernel) {
    const Eigen::VectorXcd a = kernel.u_hat_abs().cast<std::complex<double>>();
    const Eigen::VectorXcd ah = dft_forward(a, kernel.dim(), kernel.side());
    const Eigen::VectorXcd prod = ah.cwiseProduct(ah);
    const Eigen::VectorXcd conv = dft_inverse(prod, kernel.dim(), kernel.side());
    Eigen::VectorXd gamma(kernel.points());
    for (int i = 0; i < kernel.points(); ++i) gamma(i) = std::max(conv(i).real(), 0.0);
    return gamma;
}

Eigen::VectorXd LatticeKernel::potential_real() const {
    Eigen::VectorXcd uh(points_);
    for (int i = 0; i < points_; ++i) uh(i) = u_hat(i);
    const Eigen::VectorXcd u = dft_inverse(uh, d_, n_);
    return u.real();
}

PotentialKernel LatticeKernel::dense_potential() const {
    const Eigen::VectorXd u = potential_real();
    Eigen::MatrixXd mat(points_, points_);
    for (int x = 0; x < points_; ++x) {
        const auto xv = unravel(x);
        for (int y = 0; y < points_; ++y) {
            auto yv = unravel(y);
            int idx = 0;
            for (int a = 0; a < d_; ++a) idx = idx * n_ + ((yv[a] - xv[a]) % n_ + n_) % n_;
            mat(x, y) = u(idx);
        }
    }
    return PotentialKernel{std::move(mat), Eigen::VectorXd::Ones(points_)};
}

namespace {

Eigen::VectorXcd atoms_dft(const LatticeKernel& kernel, const Eigen::VectorXd& atoms) {
    if (atoms.size() != kernel.points())
        throw std::invalid_argument("measure size mismatch");
    return dft_forward(atoms.cast<std::complex<double>>(), kernel.dim(), kernel.side());
}

}  // namespace

double norm_gamma2(const LatticeKernel& kernel, const Eigen::VectorXd& gamma,
                   const Eigen::VectorXd& nu_atoms) {
    const Eigen::VectorXcd nu_hat = atoms_dft(kernel, nu_atoms);
    double sq = 0.0;
    for (int i = 0; i < kernel.points(); ++i) sq += std::norm(nu_hat(i)) * gamma(i);
    const double nd = std::pow(static_cast<double>(kernel.points()), 2);
    return std::sqrt(sq / nd);
}

SectorialNorm norm_sect2(const LatticeKernel& kernel, const Eigen::VectorXd& nu_atoms) {
    SectorialNorm out;
    for (int i = 0; i < kernel.points(); ++i) {
        const auto k = kernel.kappa(i);
        out.sectorial_constant =
            std::max(out.sectorial_constant, std::abs(k.imag()) / k.real());
    }
    out.sectorial_ok = out.sectorial_constant < 1.0;

    // sum_{x,y} u(x-y) u(y-x) nu_x nu_y = sum_v u(v) u(-v) R(v),
    // R = IDFT(|nu_hat|^2).
    const Eigen::VectorXd u = kernel.potential_real();
    const Eigen::VectorXcd nu_hat = atoms_dft(kernel, nu_atoms);
    Eigen::VectorXcd mod2(kernel.points());
    for (int i = 0; i < kernel.points(); ++i) mod2(i) = std::norm(nu_hat(i));
    const Eigen::VectorXcd r = dft_inverse(mod2, kernel.dim(), kernel.side());
    double s = 0.0;
    const int n = kernel.side();
    for (int v = 0; v < kernel.points(); ++v) {
        auto vv = kernel.unravel(v);
        int neg = 0;
        for (int a = 0; a < kernel.dim(); ++a) neg = neg * n + ((n - vv[a]) % n);
        s += u(v) * u(neg) * r(v).real();
    }
    out.value = std::sqrt(std::max(s, 0.0));
    return out;
}

namespace {

/// (1/N^{2d}) sum over modes with |q| in [lo, hi) of |nu_hat|^2 gamma,
/// optionally weighted by (2 pi |q|)^2.
double shell_sum(const LatticeKernel& kernel, const Eigen::VectorXd& gamma,
                 const Eigen::VectorXcd& nu_hat, double lo, double hi, bool weight_q2) {
    double s = 0.0;
    for (int i = 0; i < kernel.points(); ++i) {
        const double q = kernel.chord_radius(i);
        if (q < lo || q >= hi) continue;
        double term = std::norm(nu_hat(i)) * gamma(i);
        if (weight_q2) {
            const double lambda = 2.0 * kPi * q;
            term *= lambda * lambda;
        }
        s += term;
    }
    const double nd = std::pow(static_cast<double>(kernel.points()), 2);
    return s / nd;
}

}  // namespace

double b101_integral(const LatticeKernel& kernel, const Eigen::VectorXd& gamma,
                     const Eigen::VectorXd& nu_atoms) {
    const Eigen::VectorXcd nu_hat = atoms_dft(kernel, nu_atoms);
    const double q_max = kernel.max_chord_radius();
    double total = 0.0;
    for (double x = 1.0; x <= q_max; x *= 2.0) {
        const double tail =
            shell_sum(kernel, gamma, nu_hat, x, std::numeric_limits<double>::infinity(),
                      false);
        total += std::sqrt(tail) * std::log(2.0);
    }
    return total;
}

double phi_delta(const LatticeKernel& kernel, const Eigen::VectorXd& gamma,
                 const Eigen::VectorXd& nu_atoms, double delta) {
    if (!(delta > 0.0)) throw std::invalid_argument("phi_delta: delta must be > 0");
    const Eigen::VectorXcd nu_hat = atoms_dft(kernel, nu_atoms);
    const double q_cut = 1.0 / (2.0 * kPi * delta);  // |lambda| = 1/delta
    const double low = shell_sum(kernel, gamma, nu_hat, 0.0, q_cut, true);
    const double high = shell_sum(kernel, gamma, nu_hat, q_cut,
                                  std::numeric_limits<double>::infinity(), false);
    return std::sqrt(delta * delta * low + high);
}

double omega_delta(const LatticeKernel& kernel, const Eigen::VectorXd& gamma,
                   const Eigen::VectorXd& nu_atoms, double delta) {
    if (!(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("omega_delta: need 0 < delta < 1");
    auto phi = [&](double u) { return phi_delta(kernel, gamma, nu_atoms, u); };
    // Below u0 every mode sits in the low shell and phi(u) = c u exactly,
    // so the head of the integral is phi(u0).
    const double u0 = 1.0 / (2.0 * kPi * kernel.max_chord_radius());
    double integral;
    if (delta <= u0) {
        integral = phi(delta);
    } else {
        auto g = [&](double s) { return phi(std::exp(s)); };  // phi(u)/u du = phi(e^s) ds
        integral = phi(u0) + integrate(g, std::log(u0), std::log(delta), 1e-8, 1e-14);
    }
    return phi(delta) * std::log(1.0 / delta) + integral;
}

TauFit tau_fit(const LatticeKernel& kernel, const Eigen::VectorXd& gamma) {
    TauFit fit;
    const double q_max = kernel.max_chord_radius();
    const double q_lo = q_max / 2.0;

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int count = 0;
    for (int i = 0; i < kernel.points(); ++i) {
        const double q = kernel.chord_radius(i);
        if (q < q_lo) continue;
        const double x = std::log(q);
        const double y = std::log(std::abs(kernel.kappa(i)));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++count;
    }
    if (count >= 2) {
        const double denom = count * sxx - sx * sx;
        fit.slope = (count * sxy - sx * sy) / denom;
        fit.intercept = (sy - fit.slope * sx) / count;
    }
    for (int i = 0; i < kernel.points(); ++i) {
        const double q = kernel.chord_radius(i);
        if (q < q_lo) continue;
        const double resid = std::log(std::abs(kernel.kappa(i))) -
                             (fit.intercept + fit.slope * std::log(q));
        fit.residual_band = std::max(fit.residual_band, std::abs(resid));
        const double tau = std::exp(fit.intercept + fit.slope * std::log(q));
        fit.lemma73_bound = std::max(
            fit.lemma73_bound, gamma(i) * tau * tau / std::pow(q, kernel.dim()));
    }
    for (int i = 0; i < kernel.points(); ++i) {
        const double q = kernel.chord_radius(i);
        if (q <= 0.0) continue;
        const double k2 = std::norm(kernel.kappa(i));
        fit.lemma71_premise = std::max(
            fit.lemma71_premise, std::pow(q, kernel.dim()) / (k2 * gamma(i)));
    }

    // Lemma 7.3a: max_xi sum_l |u_hat(l)|^2 |u_hat(xi-l)| / (|u_hat(xi)| ||u_hat||_2^2),
    // the numerator is one more circular convolution.
    const Eigen::VectorXcd a2 =
        kernel.u_hat_abs().cwiseProduct(kernel.u_hat_abs()).cast<std::complex<double>>();
    const Eigen::VectorXcd a1 = kernel.u_hat_abs().cast<std::complex<double>>();
    const Eigen::VectorXcd conv = dft_inverse(
        dft_forward(a2, kernel.dim(), kernel.side())
            .cwiseProduct(dft_forward(a1, kernel.dim(), kernel.side())),
        kernel.dim(), kernel.side());
    const double l2 = kernel.u_hat_abs().squaredNorm();
    for (int i = 0; i < kernel.points(); ++i) {
        fit.lemma73a_constant = std::max(
            fit.lemma73a_constant, conv(i).real() / (kernel.u_hat_abs()(i) * l2));
    }
    return fit;
}

MarkovModel lattice_walk_model(int d, int N, double beta, double rate,
                               std::vector<double> drift) {
    if (rate < 0.0) rate = static_cast<double>(N) * N;
    if (drift.empty()) drift.assign(d, 0.0);
    const int points = ipow(N, d);
    ModelSpec spec;
    spec.rates = Eigen::MatrixXd::Zero(points, points);
    spec.kill = Eigen::VectorXd::Constant(points, beta);
    spec.m = Eigen::VectorXd::Ones(points);
    for (int x = 0; x < points; ++x) {
        int rem = x;
        std::vector<int> xs(d);
        for (int a = d - 1; a >= 0; --a) {
            xs[a] = rem % N;
            rem /= N;
        }
        for (int a = 0; a < d; ++a) {
            auto neighbour = [&](int step) {
                std::vector<int> ys = xs;
                ys[a] = ((ys[a] + step) % N + N) % N;
                int idx = 0;
                for (int b = 0; b < d; ++b) idx = idx * N + ys[b];
                return idx;
            };
            spec.rates(x, neighbour(+1)) += rate + drift[a];
            spec.rates(x, neighbour(-1)) += rate;
        }
    }
    return MarkovModel::build(spec);
}

}  // namespace permfield
