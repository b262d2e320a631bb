#include "permfield/norms.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>

#include "permfield/moments.hpp"
#include "permfield/quadrature.hpp"

namespace permfield {

double norm_u2_inf(const PotentialKernel& kernel, const SignedMeasure& nu) {
    const Eigen::VectorXd abs_nu = nu.atoms.cwiseAbs();
    const Eigen::MatrixXd u2 = kernel.u.cwiseProduct(kernel.u);
    const Eigen::VectorXd row_part = u2 * abs_nu;             // sum_y u(x,y)^2 |nu_y|
    const Eigen::VectorXd col_part = u2.transpose() * abs_nu; // sum_y u(y,x)^2 |nu_y|
    return std::max(abs_nu.sum(), (row_part + col_part).maxCoeff());
}

double norm_zero(const PotentialKernel& kernel, const SignedMeasure& nu) {
    const Eigen::VectorXd abs_nu = nu.atoms.cwiseAbs();
    return std::max(abs_nu.sum(), (kernel.u * abs_nu).maxCoeff());
}

double norm_two_pd(const PotentialKernel& kernel, const SignedMeasure& nu, double pd_tol) {
    const Eigen::MatrixXd sym = 0.5 * (kernel.u + kernel.u.transpose());
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    if (es.eigenvalues().minCoeff() < -pd_tol)
        throw NotPositiveDefinite("||.||_(2) requires a positive definite kernel");
    const Eigen::MatrixXd s = kernel.u + kernel.u.transpose();
    const Eigen::VectorXd abs_nu = nu.atoms.cwiseAbs();
    const double q = abs_nu.dot(s.cwiseProduct(s) * abs_nu);
    return std::sqrt(std::max(q, 0.0));
}

double norm_pi_ubar(const PotentialKernel& kernel, const SignedMeasure& nu) {
    const Eigen::MatrixXd chain = kernel.u * nu.atoms.asDiagonal() * kernel.u;
    return std::max(nu.total_variation(), chain.cwiseAbs().maxCoeff());
}

Eigen::MatrixXd w_half_matrix(const MarkovModel& model, double rel_tol) {
    // int_0^inf e^{sQ}/sqrt(pi s) ds  =  (2/sqrt(pi)) int_0^inf e^{v^2 Q} dv,
    // integrated entrywise; the substitution removes the s^{-1/2} endpoint.
    const int n = model.size();
    const double decay = -model.spectral_bound();
    const double v_max =
        std::sqrt(truncation_point(1.0, decay, 0, static_cast<double>(n), 1e-16));
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            auto f = [&](double v) { return model.semigroup(v * v)(i, j); };
            w(i, j) = 2.0 / std::sqrt(M_PI) * integrate(f, 0.0, v_max, rel_tol, 1e-14);
        }
    return w;
}

double norm_w(const MarkovModel& model, const SignedMeasure& nu, double ident_tol) {
    const Eigen::MatrixXd w = w_half_matrix(model);
    const PotentialKernel kernel = potential_kernel(model);
    const Eigen::MatrixXd neg_q_inv = kernel.u * model.weights().asDiagonal();
    const double scale = neg_q_inv.cwiseAbs().maxCoeff();
    if (((w * w - neg_q_inv).cwiseAbs().maxCoeff()) > ident_tol * scale)
        throw IdentityViolation("W^2 = U identity violated beyond tolerance");

    const Eigen::VectorXd m = model.weights();
    const Eigen::VectorXd density = nu.atoms.cwiseQuotient(m);
    // M_nu(x,z) = [W diag(nu/m) W]_{xz} / m_z
    Eigen::MatrixXd mat = w * density.asDiagonal() * w;
    for (int z = 0; z < model.size(); ++z) mat.col(z) /= m(z);
    double sq = 0.0;
    for (int x = 0; x < model.size(); ++x)
        for (int z = 0; z < model.size(); ++z)
            sq += mat(x, z) * mat(x, z) * m(x) * m(z);
    return std::sqrt(sq);
}

namespace {

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& a, const Eigen::MatrixXd& c) {
    // A X + X A^T = -C via the Kronecker system (I (+) A + A (+) I) vec X = -vec C.
    const int n = static_cast<int>(a.rows());
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd sys = Eigen::kroneckerProduct(id, a).eval() +
                                Eigen::kroneckerProduct(a, id).eval();
    const Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(c.data(), n * n);
    const Eigen::VectorXd x = sys.fullPivLu().solve(rhs);
    return Eigen::Map<const Eigen::MatrixXd>(x.data(), n, n);
}

}  // namespace

Eigen::MatrixXd theta_left_lyapunov(const MarkovModel& model) {
    const Eigen::MatrixXd c = model.weights().cwiseInverse().asDiagonal();
    return 2.0 * solve_lyapunov(model.generator(), c);
}

Eigen::MatrixXd theta_right_lyapunov(const MarkovModel& model) {
    const Eigen::MatrixXd c = model.weights().cwiseInverse().asDiagonal();
    return 2.0 * solve_lyapunov(model.generator().transpose(), c);
}

namespace {

Eigen::MatrixXd theta_quadrature(const MarkovModel& model, bool left, double rel_tol) {
    const int n = model.size();
    const double decay = -model.spectral_bound();
    const double t_max = truncation_point(1.0, 2.0 * decay, 0,
                                          static_cast<double>(n * n), 1e-16);
    const Eigen::MatrixXd inv_m = model.weights().cwiseInverse().asDiagonal();
    Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            auto f = [&](double s) {
                const Eigen::MatrixXd e = model.semigroup(s / 2.0);
                Eigen::MatrixXd prod;
                if (left)
                    prod = e * inv_m * e.transpose();
                else
                    prod = e.transpose() * inv_m * e;
                return prod(i, j);
            };
            theta(i, j) = integrate(f, 0.0, t_max, rel_tol, 1e-14);
        }
    return theta;
}

}  // namespace

Eigen::MatrixXd theta_left_quadrature(const MarkovModel& model, double rel_tol) {
    return theta_quadrature(model, true, rel_tol);
}

Eigen::MatrixXd theta_right_quadrature(const MarkovModel& model, double rel_tol) {
    return theta_quadrature(model, false, rel_tol);
}

double norm_phi(const MarkovModel& model, const SignedMeasure& nu, double quad_form_tol) {
    const Eigen::MatrixXd phi =
        theta_left_lyapunov(model).cwiseProduct(theta_right_lyapunov(model));
    const double q = nu.atoms.dot(phi * nu.atoms);
    const double q_abs = nu.atoms.cwiseAbs().dot(phi * nu.atoms.cwiseAbs());
    const double scale = std::max(1.0, phi.cwiseAbs().maxCoeff());
    if (q < -quad_form_tol * scale || q_abs < -quad_form_tol * scale)
        throw NotPositiveDefinite("Phi quadratic form is negative beyond tolerance");
    return std::sqrt(std::max(q, 0.0));
}

std::string norm_kind_name(NormKind kind) {
    switch (kind) {
        case NormKind::u2_inf: return "u2_inf";
        case NormKind::zero: return "zero";
        case NormKind::two_pd: return "two_pd";
        case NormKind::w_norm: return "w";
        case NormKind::phi_norm: return "phi";
        case NormKind::pi_ubar: return "pi_ubar";
    }
    return "?";
}

std::function<double(const SignedMeasure&)> make_norm(NormKind kind,
                                                      const MarkovModel& model) {
    switch (kind) {
        case NormKind::u2_inf: {
            auto kernel = potential_kernel(model);
            return [kernel](const SignedMeasure& nu) { return norm_u2_inf(kernel, nu); };
        }
        case NormKind::zero: {
            auto kernel = potential_kernel(model);
            return [kernel](const SignedMeasure& nu) { return norm_zero(kernel, nu); };
        }
        case NormKind::two_pd: {
            auto kernel = potential_kernel(model);
            return [kernel](const SignedMeasure& nu) { return norm_two_pd(kernel, nu); };
        }
        case NormKind::pi_ubar: {
            auto kernel = potential_kernel(model);
            return [kernel](const SignedMeasure& nu) { return norm_pi_ubar(kernel, nu); };
        }
        case NormKind::w_norm: {
            // Precompute W once; re-derive the norm body from it.
            const Eigen::MatrixXd w = w_half_matrix(model);
            const Eigen::VectorXd m = model.weights();
            return [w, m](const SignedMeasure& nu) {
                Eigen::MatrixXd mat = w * nu.atoms.cwiseQuotient(m).asDiagonal() * w;
                for (int z = 0; z < m.size(); ++z) mat.col(z) /= m(z);
                double sq = 0.0;
                for (int x = 0; x < m.size(); ++x)
                    for (int z = 0; z < m.size(); ++z)
                        sq += mat(x, z) * mat(x, z) * m(x) * m(z);
                return std::sqrt(sq);
            };
        }
        case NormKind::phi_norm: {
            const Eigen::MatrixXd phi =
                theta_left_lyapunov(model).cwiseProduct(theta_right_lyapunov(model));
            return [phi](const SignedMeasure& nu) {
                return std::sqrt(std::max(nu.atoms.dot(phi * nu.atoms), 0.0));
            };
        }
    }
    throw std::invalid_argument("unknown norm kind");
}

SignedMeasure random_probe_measure(int n, Rng& rng) {
    Eigen::VectorXd atoms(n);
    for (int i = 0; i < n; ++i) atoms(i) = rng.uniform(-1.0, 1.0);
    const double coin = rng.uniform();
    if (coin < 0.25) {
        atoms = atoms.cwiseMax(0.0);
    } else if (coin < 0.5) {
        atoms = atoms.cwiseMin(0.0);
    }
    // Guard against the (measure-zero) all-zero draw.
    if (atoms.cwiseAbs().maxCoeff() == 0.0) atoms(0) = 0.5;
    return {atoms};
}

ProbeReport proper_constant_probe(const PotentialKernel& kernel,
                                  const std::function<double(const SignedMeasure&)>& norm,
                                  Rng& rng, int n_max, int trials, bool pi_variant,
                                  const std::vector<SignedMeasure>& extra) {
    if (n_max > 8) throw TooLarge("probe order exceeds 8");
    ProbeReport report;
    for (int n = 2; n <= n_max; ++n) {
        double max_ratio = 0.0;
        for (int trial = 0; trial < trials; ++trial) {
            std::vector<SignedMeasure> tuple;
            tuple.reserve(n);
            for (int j = 0; j < n; ++j) {
                if (!extra.empty() && rng.uniform() < 0.25) {
                    tuple.push_back(
                        extra[static_cast<std::size_t>(rng.uniform() * extra.size()) %
                              extra.size()]);
                } else {
                    tuple.push_back(random_probe_measure(kernel.size(), rng));
                }
            }
            double numer;
            if (!pi_variant) {
                numer = std::abs(cyclic_integral(kernel, tuple));
            } else {
                // |sum_pi cyclic| / n! == |mu moment| / (n-1)!  (Lemma ls.4)
                numer = std::abs(mu_moment(kernel, tuple));
                for (int j = 1; j < n; ++j) numer /= j;
            }
            double denom = 1.0;
            for (const auto& nu : tuple) denom *= norm(nu);
            if (denom > 0.0) {
                max_ratio = std::max(max_ratio, numer / denom);
                report.trials.push_back({n, trial, numer / denom});
            }
        }
        report.orders.push_back(n);
        report.max_ratio.push_back(max_ratio);
        report.c_fit.push_back(std::pow(max_ratio, 1.0 / n));
    }
    report.fitted_c = *std::max_element(report.c_fit.begin(), report.c_fit.end());
    report.stable = true;
    for (std::size_t i = 0; i < report.orders.size(); ++i) {
        if (report.orders[i] <= 3 || i == 0) continue;
        if (report.c_fit[i] > 1.10 * report.c_fit[i - 1]) report.stable = false;
    }
    return report;
}

}  // namespace permfield
