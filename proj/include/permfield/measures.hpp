#pragma once

#include <Eigen/Dense>

#include "permfield/markov.hpp"

namespace permfield {

/// Finite signed measure on the state set, stored as its atom vector.
struct SignedMeasure {
    Eigen::VectorXd atoms;

    static SignedMeasure zero(int n) { return {Eigen::VectorXd::Zero(n)}; }
    static SignedMeasure delta(int n, int x, double weight = 1.0) {
        Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
        a(x) = weight;
        return {a};
    }

    int size() const { return static_cast<int>(atoms.size()); }
    double total_variation() const { return atoms.cwiseAbs().sum(); }
    SignedMeasure abs() const { return {atoms.cwiseAbs()}; }
    SignedMeasure positive_part() const { return {atoms.cwiseMax(0.0)}; }
    SignedMeasure negative_part() const { return {(-atoms).cwiseMax(0.0)}; }
    bool is_nonnegative() const { return (atoms.array() >= 0.0).all(); }

    SignedMeasure operator+(const SignedMeasure& o) const { return {atoms + o.atoms}; }
    SignedMeasure operator-(const SignedMeasure& o) const { return {atoms - o.atoms}; }
    SignedMeasure operator*(double c) const { return {atoms * c}; }
};

/// L^nu_t along a path: each sojourn at y accumulates at density nu({y})/m_y.
/// This normalization makes E^x L^nu_inf = sum_y u(x,y) nu({y}) exact.
double caf_total(const Path& path, const SignedMeasure& nu, const Eigen::VectorXd& m);
double caf_at(const Path& path, const SignedMeasure& nu, const Eigen::VectorXd& m,
              double t);

/// Breakpoint representation of t -> L^nu_t (piecewise linear).
struct CAFTrace {
    std::vector<double> breakpoints;  // starts at 0
    std::vector<double> values;       // same length; values[0] == 0
};

CAFTrace caf_trace(const Path& path, const SignedMeasure& nu, const Eigen::VectorXd& m);

/// U nu (x) = sum_y u(x,y) nu({y}).
Eigen::VectorXd revuz_potential(const PotentialKernel& kernel, const SignedMeasure& nu);

struct RevuzReport {
    double empirical_mean = 0.0;
    double std_error = 0.0;
    double exact = 0.0;
    double z = 0.0;
    std::size_t samples = 0;
    bool pass = false;
};

/// Monte Carlo check of E^x(L^nu_inf) = (U nu)(x) for nu >= 0.
RevuzReport verify_revuz(const MarkovModel& model, const SignedMeasure& nu_pos, int x,
                         std::size_t samples, Rng& rng);

}  // namespace permfield
