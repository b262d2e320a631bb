#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "permfield/errors.hpp"
#include "permfield/rng.hpp"

namespace permfield {

struct Sojourn {
    int state;
    double duration;
};

/// A realized chain trajectory: consecutive sojourns from `start` until the
/// path is killed (sample_path) or cut at a fixed horizon (sample_bridge).
struct Path {
    int start = 0;
    std::vector<Sojourn> sojourns;

    double lifetime() const {
        double t = 0.0;
        for (const auto& s : sojourns) t += s.duration;
        return t;
    }
};

struct ModelSpec {
    std::vector<std::string> states;
    Eigen::MatrixXd rates;  // off-diagonal jump rates, zero diagonal
    Eigen::VectorXd kill;
    Eigen::VectorXd m;
};

/// Finite-state transient continuous-time chain. Immutable after build();
/// safe to share across threads.
class MarkovModel {
  public:
    static MarkovModel build(const ModelSpec& spec);

    int size() const { return static_cast<int>(m_.size()); }
    const std::vector<std::string>& states() const { return names_; }
    const Eigen::MatrixXd& generator() const { return q_; }
    const Eigen::MatrixXd& rates() const { return rates_; }
    const Eigen::VectorXd& kill() const { return kill_; }
    const Eigen::VectorXd& weights() const { return m_; }

    /// max Re(eigenvalue of Q); strictly negative for a valid model.
    double spectral_bound() const { return spectral_bound_; }

    /// e^{tQ} (the semigroup acting on functions, row-stochastic up to killing).
    Eigen::MatrixXd semigroup(double t) const;

    /// Transition density p_t(x,y) = (e^{tQ})_{xy} / m_y with respect to m.
    /// Huge t underflows to zero entries; no error is raised.
    Eigen::MatrixXd transition_density(double t) const;

    const std::vector<std::string>& warnings() const { return warnings_; }

    int state_index(const std::string& name) const;

  private:
    MarkovModel() = default;

    std::vector<std::string> names_;
    Eigen::MatrixXd rates_;
    Eigen::VectorXd kill_;
    Eigen::VectorXd m_;
    Eigen::MatrixXd q_;
    double spectral_bound_ = 0.0;
    std::vector<std::string> warnings_;
};

/// Potential densities u(x,y) = ((-Q)^{-1})_{xy} / m_y together with the
/// reference weights; U f(x) = sum_y u(x,y) f(y) m_y inverts -Q exactly.
struct PotentialKernel {
    Eigen::MatrixXd u;
    Eigen::VectorXd m;

    int size() const { return static_cast<int>(m.size()); }
};

PotentialKernel potential_kernel(const MarkovModel& model);

/// Forward simulation from `start` until killing.
Path sample_path(const MarkovModel& model, int start, Rng& rng);

/// Uniformization helper: caches powers of the substochastic jump matrix
/// P = I + Q/rate. Not thread-safe; create one per worker.
class Uniformization {
  public:
    explicit Uniformization(const MarkovModel& model);

    double rate() const { return rate_; }
    const Eigen::MatrixXd& power(int k);

    const MarkovModel& model() const { return *model_; }

  private:
    const MarkovModel* model_;
    double rate_;
    std::vector<Eigen::MatrixXd> powers_;
};

/// Samples the normalized bridge Q_t^{x,y} / p_t(x,y): the path pinned to be
/// at y at time t-, alive throughout [0,t). Throws UnderflowBridge when
/// p_t(x,y) underflows.
Path sample_bridge(Uniformization& uni, int x, int y, double t, Rng& rng);

/// Canonical test fixtures shared by the suites and the CLI defaults.
MarkovModel make_k2();
MarkovModel make_k4(std::uint64_t seed = 20240913);

}  // namespace permfield
