#include "permfield/loop.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "permfield/quadrature.hpp"

namespace permfield {

namespace {

double integrate_lifetime(const MarkovModel& model,
                          const std::function<double(double)>& f, double delta,
                          int poly_degree, double rel_tol) {
    const double decay = -model.spectral_bound();
    const double t_max = truncation_point(delta, 0.9 * decay, poly_degree,
                                          10.0 * model.size(), 1e-16);
    // Integrate in log time; (1/t)-type weights flatten there.
    auto g = [&](double s) {
        const double t = std::exp(s);
        return f(t) * t;
    };
    double err = 0.0;
    const double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        g, std::log(delta), std::log(t_max), 15, rel_tol, &err);
    if (err > rel_tol * std::max(std::abs(v), 1e-300) && err > 1e-290)
        throw QuadratureFailure("lifetime quadrature did not converge");
    return v;
}

}  // namespace

double loop_mass(const MarkovModel& model, double delta, double rel_tol) {
    if (!(delta > 0.0)) throw std::invalid_argument("loop_mass: delta must be > 0");
    auto f = [&](double t) { return model.semigroup(t).trace() / t; };
    return integrate_lifetime(model, f, delta, 1, rel_tol);
}

double centering_term(const MarkovModel& model, const SignedMeasure& nu, double delta,
                      double rel_tol) {
    if (!(delta > 0.0)) throw std::invalid_argument("centering_term: delta must be > 0");
    if (nu.atoms.cwiseAbs().maxCoeff() == 0.0) return 0.0;
    const Eigen::VectorXd density = nu.atoms.cwiseQuotient(model.weights());
    auto f = [&](double t) {
        return model.semigroup(t).diagonal().dot(density);
    };
    return integrate_lifetime(model, f, delta, 1, rel_tol);
}

namespace {

/// Corner block of exp(t A) for the block-bidiagonal A with Q on the diagonal
/// and the D_j on the superdiagonal: the k-fold order-simplex convolution
/// int e^{r1 Q} D_1 e^{(r2-r1) Q} ... D_k e^{(t-rk) Q} dr.
Eigen::MatrixXd simplex_convolution(const Eigen::MatrixXd& q,
                                    const std::vector<Eigen::MatrixXd>& ds, double t) {
    const int n = static_cast<int>(q.rows());
    const int k = static_cast<int>(ds.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero((k + 1) * n, (k + 1) * n);
    for (int b = 0; b <= k; ++b) a.block(b * n, b * n, n, n) = q;
    for (int b = 0; b < k; ++b) a.block(b * n, (b + 1) * n, n, n) = ds[b];
    const Eigen::MatrixXd e = (t * a).exp();
    return e.block(0, k * n, n, n);
}

std::vector<Eigen::MatrixXd> caf_densities(const MarkovModel& model,
                                           const std::vector<SignedMeasure>& nus) {
    std::vector<Eigen::MatrixXd> ds;
    ds.reserve(nus.size());
    for (const auto& nu : nus)
        ds.push_back(nu.atoms.cwiseQuotient(model.weights()).asDiagonal());
    return ds;
}

}  // namespace

double bridge_moment(const MarkovModel& model, int x, int y, double t,
                     const std::vector<SignedMeasure>& nus) {
    const int k = static_cast<int>(nus.size());
    if (k > 6) throw TooLarge("bridge_moment order exceeds 6");
    if (k == 0) return model.semigroup(t)(x, y) / model.weights()(y);
    const auto ds = caf_densities(model, nus);
    std::vector<int> pi(k);
    std::iota(pi.begin(), pi.end(), 0);
    long double total = 0.0L;
    do {
        std::vector<Eigen::MatrixXd> ordered;
        ordered.reserve(k);
        for (int j : pi) ordered.push_back(ds[j]);
        total += simplex_convolution(model.generator(), ordered, t)(x, y);
    } while (std::next_permutation(pi.begin(), pi.end()));
    return static_cast<double>(total) / model.weights()(y);
}

double mu_moment_cutoff(const MarkovModel& model, const std::vector<SignedMeasure>& nus,
                        double delta, double rel_tol) {
    if (!(delta > 0.0)) throw std::invalid_argument("mu_moment_cutoff: delta must be > 0");
    const int k = static_cast<int>(nus.size());
    if (k == 0) return loop_mass(model, delta, rel_tol);
    if (k == 1) return centering_term(model, nus[0], delta, rel_tol);
    if (k > 6) throw TooLarge("cutoff moment order exceeds 6");

    const auto ds = caf_densities(model, nus);
    // The trace of the simplex convolution is invariant under cyclic rotation
    // of the D ordering, so sum over orderings anchored at measure 0 times k.
    std::vector<int> rest(k - 1);
    std::iota(rest.begin(), rest.end(), 1);
    auto f = [&](double t) {
        std::vector<int> pi = rest;
        long double acc = 0.0L;
        do {
            std::vector<Eigen::MatrixXd> ordered;
            ordered.reserve(k);
            ordered.push_back(ds[0]);
            for (int j : pi) ordered.push_back(ds[j]);
            acc += simplex_convolution(model.generator(), ordered, t).trace();
        } while (std::next_permutation(pi.begin(), pi.end()));
        return static_cast<double>(acc) * k / t;
    };
    return integrate_lifetime(model, f, delta, k + 1, rel_tol);
}

double poisson_mixed_moment_cutoff(const MarkovModel& model, double alpha,
                                   const MomentSpec& spec, double delta) {
    return detail::mixed_moment_over(
        spec, alpha, [&](const std::vector<SignedMeasure>& nus) {
            return mu_moment_cutoff(model, nus, delta);
        });
}

LifetimeSampler::LifetimeSampler(const MarkovModel& model, double delta) {
    if (!(delta > 0.0)) throw std::invalid_argument("lifetime cutoff must be > 0");
    const double decay = -model.spectral_bound();
    // Dropped tail below 1e-12 of the total: bound the integrand by
    // n e^{-decay t}/t and push T until the bound's integral is negligible.
    double t_max = std::max(2.0 * delta, 1.0);
    const double rough = loop_mass(model, delta, 1e-9);
    while (model.size() * std::exp(-decay * t_max) / (decay * t_max) > 1e-12 * rough)
        t_max *= 1.25;

    const int cells = 4096;
    knots_.resize(cells + 1);
    cum_.resize(cells + 1);
    const double ls = std::log(delta), le = std::log(t_max);
    for (int i = 0; i <= cells; ++i)
        knots_[i] = std::exp(ls + (le - ls) * i / cells);
    cum_[0] = 0.0;
    double prev = model.semigroup(knots_[0]).trace() / knots_[0];
    for (int i = 1; i <= cells; ++i) {
        const double cur = model.semigroup(knots_[i]).trace() / knots_[i];
        cum_[i] = cum_[i - 1] + 0.5 * (prev + cur) * (knots_[i] - knots_[i - 1]);
        prev = cur;
    }
    total_ = cum_.back();
}

double LifetimeSampler::sample(Rng& rng) const {
    const double target = rng.uniform() * total_;
    const auto it = std::lower_bound(cum_.begin(), cum_.end(), target);
    std::size_t i = static_cast<std::size_t>(it - cum_.begin());
    if (i == 0) i = 1;
    if (i >= cum_.size()) i = cum_.size() - 1;
    const double c0 = cum_[i - 1], c1 = cum_[i];
    const double frac = c1 > c0 ? (target - c0) / (c1 - c0) : 0.5;
    return knots_[i - 1] + frac * (knots_[i] - knots_[i - 1]);
}

double LifetimeSampler::cdf(double t) const {
    if (t <= knots_.front()) return 0.0;
    if (t >= knots_.back()) return 1.0;
    const auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
    const std::size_t i = static_cast<std::size_t>(it - knots_.begin());
    const double frac = (t - knots_[i - 1]) / (knots_[i] - knots_[i - 1]);
    return (cum_[i - 1] + frac * (cum_[i] - cum_[i - 1])) / total_;
}

SoupSampler::SoupSampler(const MarkovModel& model, double alpha, double delta)
    : model_(&model), alpha_(alpha), delta_(delta), lifetimes_(model, delta), uni_(model) {
    if (!(alpha > 0.0)) throw std::invalid_argument("soup intensity must be > 0");
}

Loop SoupSampler::sample_loop(Rng& rng) {
    const double t = lifetimes_.sample(rng);
    const Eigen::VectorXd diag = model_->semigroup(t).diagonal();
    const int root = rng.discrete(diag, model_->size());
    Loop loop;
    loop.root = root;
    loop.lifetime = t;
    loop.path = sample_bridge(uni_, root, root, t, rng);
    return loop;
}

LoopSoup SoupSampler::sample(Rng& rng) {
    LoopSoup soup;
    soup.alpha = alpha_;
    soup.delta = delta_;
    const std::uint64_t n = rng.poisson(alpha_ * lifetimes_.total_mass());
    soup.loops.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) soup.loops.push_back(sample_loop(rng));
    return soup;
}

double occupation_field(const LoopSoup& soup, const SignedMeasure& nu,
                        const MarkovModel& model) {
    return occupation_field(soup, nu, model.weights(),
                            centering_term(model, nu, soup.delta));
}

double occupation_field(const LoopSoup& soup, const SignedMeasure& nu,
                        const Eigen::VectorXd& m, double centering) {
    double acc = 0.0;
    for (const auto& loop : soup.loops) acc += caf_total(loop.path, nu, m);
    return acc - soup.alpha * centering;
}

double theta_functional(const LoopSoup& soup, const SignedMeasure& rho,
                        const SignedMeasure& phi, const Eigen::VectorXd& m) {
    if (!rho.is_nonnegative() || !phi.is_nonnegative())
        throw std::invalid_argument("theta_functional: rho, phi must be >= 0");
    double acc = 0.0;
    for (const auto& loop : soup.loops)
        acc += caf_total(loop.path, rho, m) * caf_total(loop.path, phi, m);
    return acc;
}

std::string soup_to_jsonl(const LoopSoup& soup) {
    std::ostringstream out;
    for (const auto& loop : soup.loops) {
        nlohmann::ordered_json j;
        j["root"] = loop.root;
        j["lifetime"] = loop.lifetime;
        std::vector<int> skeleton;
        std::vector<double> holds;
        for (const auto& s : loop.path.sojourns) {
            skeleton.push_back(s.state);
            holds.push_back(s.duration);
        }
        j["skeleton"] = skeleton;
        j["holds"] = holds;
        out << j.dump() << "\n";
    }
    return out.str();
}

LoopSoup soup_from_jsonl(const std::string& text, double alpha, double delta) {
    LoopSoup soup;
    soup.alpha = alpha;
    soup.delta = delta;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        Loop loop;
        loop.root = j.at("root").get<int>();
        loop.lifetime = j.at("lifetime").get<double>();
        const auto skeleton = j.at("skeleton").get<std::vector<int>>();
        const auto holds = j.at("holds").get<std::vector<double>>();
        loop.path.start = loop.root;
        for (std::size_t i = 0; i < skeleton.size(); ++i)
            loop.path.sojourns.push_back({skeleton[i], holds[i]});
        soup.loops.push_back(std::move(loop));
    }
    return soup;
}

}  // namespace permfield
