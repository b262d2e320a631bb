#include "permfield/measures.hpp"

#include <cmath>
#include <stdexcept>

#include "permfield/stats.hpp"

namespace permfield {

double caf_total(const Path& path, const SignedMeasure& nu, const Eigen::VectorXd& m) {
    double acc = 0.0;
    for (const auto& s : path.sojourns) acc += s.duration * nu.atoms(s.state) / m(s.state);
    return acc;
}

double caf_at(const Path& path, const SignedMeasure& nu, const Eigen::VectorXd& m,
              double t) {
    if (t < 0.0) throw std::invalid_argument("caf_at: t must be >= 0");
    double acc = 0.0;
    double elapsed = 0.0;
    for (const auto& s : path.sojourns) {
        if (t >= elapsed + s.duration) {
            acc += s.duration * nu.atoms(s.state) / m(s.state);
        } else {
            acc += (t - elapsed) * nu.atoms(s.state) / m(s.state);
            return acc;
        }
        elapsed += s.duration;
    }
    return acc;  // t >= lifetime: L^nu_t = L^nu_zeta
}

CAFTrace caf_trace(const Path& path, const SignedMeasure& nu, const Eigen::VectorXd& m) {
    CAFTrace trace;
    trace.breakpoints.push_back(0.0);
    trace.values.push_back(0.0);
    double t = 0.0, v = 0.0;
    for (const auto& s : path.sojourns) {
        t += s.duration;
        v += s.duration * nu.atoms(s.state) / m(s.state);
        trace.breakpoints.push_back(t);
        trace.values.push_back(v);
    }
    return trace;
}

Eigen::VectorXd revuz_potential(const PotentialKernel& kernel, const SignedMeasure& nu) {
    return kernel.u * nu.atoms;
}

RevuzReport verify_revuz(const MarkovModel& model, const SignedMeasure& nu_pos, int x,
                         std::size_t samples, Rng& rng) {
    if (!nu_pos.is_nonnegative())
        throw std::invalid_argument("verify_revuz: measure must be nonnegative");
    if (samples < 1000) throw std::invalid_argument("verify_revuz: samples >= 10^3");
    RunningStats stats;
    for (std::size_t i = 0; i < samples; ++i) {
        const Path path = sample_path(model, x, rng);
        stats.add(caf_total(path, nu_pos, model.weights()));
    }
    RevuzReport report;
    report.samples = samples;
    report.empirical_mean = stats.mean();
    report.std_error = stats.std_error();
    report.exact = revuz_potential(potential_kernel(model), nu_pos)(x);
    report.z = stats.z_against(report.exact);
    report.pass = std::abs(report.z) <= 3.0;
    return report;
}

}  // namespace permfield
