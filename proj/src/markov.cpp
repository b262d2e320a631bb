#include "permfield/markov.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>

namespace permfield {

MarkovModel MarkovModel::build(const ModelSpec& spec) {
    const int n = static_cast<int>(spec.m.size());
    if (n == 0) throw ModelError("empty state set");
    if (spec.rates.rows() != n || spec.rates.cols() != n)
        throw ModelError("rates matrix dimension mismatch");
    if (spec.kill.size() != n) throw ModelError("kill vector dimension mismatch");
    if (!spec.states.empty() && static_cast<int>(spec.states.size()) != n)
        throw ModelError("state name list dimension mismatch");

    if (!spec.rates.allFinite() || !spec.kill.allFinite() || !spec.m.allFinite())
        throw ModelError("non-finite model entries");

    for (int i = 0; i < n; ++i) {
        if (spec.kill(i) < 0.0) throw NegativeRate("negative killing rate");
        if (spec.m(i) <= 0.0) throw NonpositiveWeight("reference weight must be > 0");
        for (int j = 0; j < n; ++j) {
            if (i == j) {
                if (spec.rates(i, j) != 0.0)
                    throw NegativeRate("rates diagonal must be zero");
            } else if (spec.rates(i, j) < 0.0) {
                throw NegativeRate("negative jump rate");
            }
        }
    }

    MarkovModel model;
    model.names_ = spec.states;
    if (model.names_.empty()) {
        for (int i = 0; i < n; ++i) model.names_.push_back("s" + std::to_string(i));
    }
    model.rates_ = spec.rates;
    model.kill_ = spec.kill;
    model.m_ = spec.m;

    model.q_ = spec.rates;
    for (int i = 0; i < n; ++i) {
        double out = spec.kill(i);
        for (int j = 0; j < n; ++j)
            if (j != i) out += spec.rates(i, j);
        model.q_(i, i) = -out;
    }

    const Eigen::EigenSolver<Eigen::MatrixXd> es(model.q_);
    double max_re = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) max_re = std::max(max_re, es.eigenvalues()(i).real());
    model.spectral_bound_ = max_re;
    const double scale = model.q_.cwiseAbs().maxCoeff();
    if (max_re >= -1e-12 * std::max(scale, 1.0))
        throw NonTransient("generator has an eigenvalue with nonnegative real part");

    // Diagnostics, not errors: the loop-measure formulas used downstream
    // depend only on p_t and m, so the dual-process and positivity
    // assumptions are probed and reported.
    for (double t : {0.1, 1.0, 10.0}) {
        const Eigen::MatrixXd etq = model.semigroup(t);
        const Eigen::VectorXd dual_mass = etq.transpose() * model.m_;
        for (int x = 0; x < n; ++x) {
            if (dual_mass(x) > model.m_(x) * (1.0 + 1e-9)) {
                model.warnings_.push_back(
                    "dual substochasticity fails at t=" + std::to_string(t));
                break;
            }
        }
    }
    if ((model.semigroup(1.0).array() <= 0.0).any())
        model.warnings_.push_back("p_t not strictly positive (reducible chain)");

    return model;
}

Eigen::MatrixXd MarkovModel::semigroup(double t) const {
    return (t * q_).exp();
}

Eigen::MatrixXd MarkovModel::transition_density(double t) const {
    Eigen::MatrixXd p = semigroup(t);
    for (int y = 0; y < size(); ++y) p.col(y) /= m_(y);
    return p;
}

int MarkovModel::state_index(const std::string& name) const {
    const auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) throw ModelError("unknown state: " + name);
    return static_cast<int>(it - names_.begin());
}

PotentialKernel potential_kernel(const MarkovModel& model) {
    const Eigen::MatrixXd neg_q = -model.generator();
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(neg_q);
    if (!lu.isInvertible()) throw SingularGenerator("-Q is singular");
    Eigen::MatrixXd u = lu.inverse();
    for (int y = 0; y < model.size(); ++y) u.col(y) /= model.weights()(y);
    return PotentialKernel{std::move(u), model.weights()};
}

Path sample_path(const MarkovModel& model, int start, Rng& rng) {
    const int n = model.size();
    if (start < 0 || start >= n) throw ModelError("invalid start state");
    Path path;
    path.start = start;
    int x = start;
    while (true) {
        const double exit_rate = -model.generator()(x, x);
        path.sojourns.push_back({x, rng.exponential(exit_rate)});
        // Jump to y with rate(x,y)/exit, die with kill(x)/exit.
        double target = rng.uniform() * exit_rate;
        int next = -1;
        for (int y = 0; y < n; ++y) {
            if (y == x) continue;
            target -= model.rates()(x, y);
            if (target <= 0.0) {
                next = y;
                break;
            }
        }
        if (next < 0) break;  // killed
        x = next;
    }
    return path;
}

Uniformization::Uniformization(const MarkovModel& model) : model_(&model) {
    rate_ = 0.0;
    for (int i = 0; i < model.size(); ++i)
        rate_ = std::max(rate_, -model.generator()(i, i));
    rate_ *= 1.05;  // keep P's diagonal strictly positive
    powers_.push_back(Eigen::MatrixXd::Identity(model.size(), model.size()));
    Eigen::MatrixXd p =
        Eigen::MatrixXd::Identity(model.size(), model.size()) + model.generator() / rate_;
    powers_.push_back(std::move(p));
}

const Eigen::MatrixXd& Uniformization::power(int k) {
    while (static_cast<int>(powers_.size()) <= k)
        powers_.push_back(powers_.back() * powers_[1]);
    return powers_[k];
}

Path sample_bridge(Uniformization& uni, int x, int y, double t, Rng& rng) {
    const MarkovModel& model = uni.model();
    const int n = model.size();
    if (x < 0 || x >= n || y < 0 || y >= n) throw ModelError("invalid bridge endpoint");
    if (!(t > 0.0)) throw ModelError("bridge duration must be > 0");

    const double lt = uni.rate() * t;
    // Candidate-jump count: P(K=k) proportional to e^{-lt} lt^k/k! (P^k)_{xy}.
    const int k_max =
        static_cast<int>(lt + 12.0 * std::sqrt(lt + 1.0) + 40.0);
    std::vector<double> w(static_cast<std::size_t>(k_max) + 1);
    double coeff = std::exp(-lt);
    double total = 0.0;
    for (int k = 0; k <= k_max; ++k) {
        w[k] = coeff * uni.power(k)(x, y);
        total += w[k];
        coeff *= lt / (k + 1);
    }
    if (!(total > 0.0) || !std::isfinite(total))
        throw UnderflowBridge("p_t(x,y) underflows for the requested bridge");

    double target = rng.uniform() * total;
    int K = 0;
    for (int k = 0; k <= k_max; ++k) {
        target -= w[k];
        if (target <= 0.0) {
            K = k;
            break;
        }
    }

    std::vector<double> times(K);
    for (int i = 0; i < K; ++i) times[i] = rng.uniform() * t;
    std::sort(times.begin(), times.end());

    // Skeleton by forward filtering against the backward powers.
    std::vector<int> skeleton(static_cast<std::size_t>(K) + 1);
    skeleton[0] = x;
    std::vector<double> probs(n);
    for (int i = 1; i <= K; ++i) {
        const Eigen::MatrixXd& step = uni.power(1);
        const Eigen::MatrixXd& back = uni.power(K - i);
        const int prev = skeleton[i - 1];
        for (int z = 0; z < n; ++z) probs[z] = step(prev, z) * back(z, y);
        skeleton[i] = rng.discrete(probs, n);
    }

    Path path;
    path.start = x;
    double prev_time = 0.0;
    int cur = x;
    for (int i = 1; i <= K; ++i) {
        if (skeleton[i] != cur) {
            path.sojourns.push_back({cur, times[i - 1] - prev_time});
            prev_time = times[i - 1];
            cur = skeleton[i];
        }
    }
    path.sojourns.push_back({cur, t - prev_time});
    return path;
}

MarkovModel make_k2() {
    ModelSpec spec;
    spec.states = {"a", "b"};
    spec.rates = Eigen::MatrixXd::Zero(2, 2);
    spec.rates(0, 1) = 1.0;
    spec.rates(1, 0) = 1.0;
    spec.kill = Eigen::VectorXd::Ones(2);
    spec.m = Eigen::VectorXd::Ones(2);
    return MarkovModel::build(spec);
}

MarkovModel make_k4(std::uint64_t seed) {
    Rng rng(seed);
    const int n = 4;
    ModelSpec spec;
    for (int i = 0; i < n; ++i) spec.states.push_back(std::string(1, char('a' + i)));
    spec.rates = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j) spec.rates(i, j) = rng.uniform(0.5, 1.5);
    spec.kill = Eigen::VectorXd::Zero(n);
    spec.m = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) spec.kill(i) = rng.uniform(0.3, 1.0);
    for (int i = 0; i < n; ++i) spec.m(i) = rng.uniform(0.5, 2.0);
    return MarkovModel::build(spec);
}

}  // namespace permfield
