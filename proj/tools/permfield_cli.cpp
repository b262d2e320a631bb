#include <CLI11.hpp>

#include <cmath>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "json.hpp"
#include "permfield/chaining.hpp"
#include "permfield/json_io.hpp"
#include "permfield/lattice.hpp"
#include "permfield/loop.hpp"
#include "permfield/markov.hpp"
#include "permfield/measures.hpp"
#include "permfield/moments.hpp"
#include "permfield/norms.hpp"
#include "permfield/verify.hpp"

namespace pf = permfield;
using nlohmann::ordered_json;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitNumericFailure = 1;
constexpr int kExitUsage = 2;

constexpr const char* kEngineVersion = "permfield 1.0";

struct CommonOpts {
    std::string model_path;
    std::string measures_path;
    std::string kernel_path;
    std::string out_path;
    std::string format = "json";
    double alpha = 1.0;
    double delta = 0.02;
    std::vector<double> delta_schedule = {0.5, 0.1, 0.02};
    std::uint64_t seed = 0;
    std::size_t samples = 20000;
    int threads = 0;
    double corrupt_u = 0.0;
    bool probe = false;
};

void emit(const CommonOpts& opts, const std::string& text) {
    if (opts.out_path.empty())
        std::cout << text << std::endl;
    else
        pf::write_text_file(opts.out_path, text);
}

pf::MarkovModel load_model(const CommonOpts& opts) {
    if (opts.model_path.empty()) return pf::make_k2();
    const auto j = nlohmann::json::parse(pf::read_text_file(opts.model_path));
    return pf::MarkovModel::build(pf::model_spec_from_json(j));
}

std::vector<std::pair<std::string, pf::SignedMeasure>> load_measures(
    const CommonOpts& opts, const pf::MarkovModel& model) {
    if (opts.measures_path.empty()) {
        // Default bundle: the unit atom at the first state and a signed pair.
        std::vector<std::pair<std::string, pf::SignedMeasure>> out;
        out.emplace_back("delta_" + model.states()[0],
                         pf::SignedMeasure::delta(model.size(), 0));
        if (model.size() > 1) {
            out.emplace_back("signed_01",
                             pf::SignedMeasure::delta(model.size(), 0) -
                                 pf::SignedMeasure::delta(model.size(), 1));
        }
        return out;
    }
    const auto j = nlohmann::json::parse(pf::read_text_file(opts.measures_path));
    return pf::measures_from_json(j, model);
}

int cmd_moments(const CommonOpts& opts) {
    const pf::MarkovModel model = load_model(opts);
    const auto measures = load_measures(opts, model);
    const pf::PotentialKernel kernel = pf::potential_kernel(model);

    ordered_json out;
    out["engine_version"] = kEngineVersion;
    out["alpha"] = opts.alpha;
    out["states"] = model.states();

    ordered_json mu_rows = ordered_json::array();
    for (const auto& [name, nu] : measures) {
        ordered_json row;
        row["measures"] = {name};
        row["value"] = pf::mu_moment(kernel, {nu});
        mu_rows.push_back(row);
    }
    for (std::size_t i = 0; i < measures.size(); ++i)
        for (std::size_t j = i; j < measures.size(); ++j) {
            ordered_json row;
            row["measures"] = {measures[i].first, measures[j].first};
            row["value"] =
                pf::mu_moment(kernel, {measures[i].second, measures[j].second});
            mu_rows.push_back(row);
        }
    out["mu_moments"] = mu_rows;

    ordered_json perm_rows = ordered_json::array();
    for (std::size_t i = 0; i < measures.size(); ++i)
        for (std::size_t j = i; j < measures.size(); ++j) {
            ordered_json row;
            row["measures"] = {measures[i].first, measures[j].first};
            row["value"] = pf::alpha_permanental_moment(
                kernel, {measures[i].second, measures[j].second}, opts.alpha);
            perm_rows.push_back(row);
        }
    out["alpha_permanental"] = perm_rows;

    ordered_json qxy_rows = ordered_json::array();
    for (int x = 0; x < model.size(); ++x)
        for (int y = 0; y < model.size(); ++y) {
            ordered_json row;
            row["x"] = model.states()[x];
            row["y"] = model.states()[y];
            row["measures"] = ordered_json::array();
            row["value"] = pf::qxy_moment(kernel, x, y, {});
            qxy_rows.push_back(row);
        }
    for (const auto& [name, nu] : measures) {
        ordered_json row;
        row["x"] = model.states()[0];
        row["y"] = model.states()[0];
        row["measures"] = {name};
        row["value"] = pf::qxy_moment(kernel, 0, 0, {nu});
        qxy_rows.push_back(row);
    }
    out["qxy_moments"] = qxy_rows;

    // Q^rho_phi moments when two nonnegative measures are available.
    ordered_json qrp_rows = ordered_json::array();
    std::vector<std::size_t> nonneg;
    for (std::size_t i = 0; i < measures.size(); ++i)
        if (measures[i].second.is_nonnegative()) nonneg.push_back(i);
    if (nonneg.size() >= 2) {
        const auto& rho = measures[nonneg[0]];
        const auto& phi = measures[nonneg[1]];
        ordered_json mass;
        mass["rho"] = rho.first;
        mass["phi"] = phi.first;
        mass["measures"] = ordered_json::array();
        mass["value"] = pf::q_rho_phi_moment(kernel, rho.second, phi.second, {});
        qrp_rows.push_back(mass);
        for (const auto& [name, nu] : measures) {
            ordered_json row;
            row["rho"] = rho.first;
            row["phi"] = phi.first;
            row["measures"] = {name};
            row["value"] = pf::q_rho_phi_moment(kernel, rho.second, phi.second, {nu});
            qrp_rows.push_back(row);
        }
    }
    out["q_rho_phi"] = qrp_rows;

    emit(opts, out.dump(2));
    return kExitPass;
}

int cmd_verify(const CommonOpts& opts) {
    if (opts.samples == 0) {
        std::cerr << "verify: --samples must be positive" << std::endl;
        return kExitUsage;
    }
    const pf::MarkovModel k2 = load_model(opts);
    const pf::MarkovModel k4 = pf::make_k4();

    ordered_json out;
    out["engine_version"] = kEngineVersion;
    out["seed"] = opts.seed;
    out["samples"] = opts.samples;
    bool pass = true;

    // Revuz identity on three fixtures.
    {
        ordered_json rows = ordered_json::array();
        pf::Rng rng(opts.seed, 1);
        auto run = [&](const pf::MarkovModel& model, const pf::SignedMeasure& nu,
                       int x, const std::string& label) {
            pf::Rng local(opts.seed, 10 + rows.size());
            const auto rep = pf::verify_revuz(model, nu, x, opts.samples, local);
            ordered_json row;
            row["fixture"] = label;
            row["empirical"] = rep.empirical_mean;
            row["exact"] = rep.exact;
            row["z"] = rep.z;
            row["pass"] = rep.pass;
            rows.push_back(row);
            pass = pass && rep.pass;
        };
        run(k2, pf::SignedMeasure::delta(2, 0), 0, "K2/delta_a");
        run(k2, pf::SignedMeasure{Eigen::VectorXd::Ones(2)}, 0, "K2/uniform");
        Eigen::VectorXd atoms(4);
        for (int i = 0; i < 4; ++i) atoms(i) = rng.uniform(0.0, 1.0);
        run(k4, pf::SignedMeasure{atoms}, 0, "K4/random");
        out["revuz"] = rows;
    }

    // Isomorphism identity, closed form, degrees 0..2.
    {
        ordered_json rows = ordered_json::array();
        pf::Rng rng(opts.seed, 2);
        auto run = [&](const pf::MarkovModel& model, const std::string& label) {
            const int n = model.size();
            auto positive = [&]() {
                Eigen::VectorXd a(n);
                for (int i = 0; i < n; ++i) a(i) = rng.uniform(0.1, 1.0);
                return pf::SignedMeasure{a};
            };
            const auto rho = positive(), phi = positive(), nu = positive();
            pf::PotentialKernel lhs_kernel = pf::potential_kernel(model);
            const pf::PotentialKernel rhs_kernel = lhs_kernel;
            if (opts.corrupt_u != 0.0) lhs_kernel.u *= (1.0 + opts.corrupt_u);
            for (int degree = 0; degree <= 2; ++degree) {
                const auto rep = pf::isomorphism_check_kernels(
                    lhs_kernel, rhs_kernel, opts.alpha, rho, phi, {nu}, {degree});
                ordered_json row;
                row["fixture"] = label;
                row["degree"] = degree;
                row["lhs"] = rep.lhs;
                row["rhs"] = rep.rhs;
                row["rel_diff"] = rep.rel_diff;
                row["pass"] = rep.pass;
                rows.push_back(row);
                pass = pass && rep.pass;
            }
        };
        run(k2, "K2");
        run(k4, "K4");
        out["isomorphism_closed"] = rows;
    }

    // Isomorphism identity, Monte Carlo RHS.
    {
        const int n = k2.size();
        pf::Rng rng(opts.seed, 3);
        Eigen::VectorXd r(n), p(n), v(n);
        for (int i = 0; i < n; ++i) r(i) = rng.uniform(0.1, 1.0);
        for (int i = 0; i < n; ++i) p(i) = rng.uniform(0.1, 1.0);
        for (int i = 0; i < n; ++i) v(i) = rng.uniform(0.1, 1.0);
        const auto rep = pf::verify_isomorphism_mc(
            k2, opts.alpha, pf::SignedMeasure{r}, pf::SignedMeasure{p},
            pf::SignedMeasure{v}, 2, opts.samples, opts.delta_schedule.back(),
            opts.seed, opts.threads);
        ordered_json rows = ordered_json::array();
        for (const auto& row : rep.rows) {
            ordered_json jrow;
            jrow["degree"] = row.degree;
            jrow["closed_form"] = row.closed_form;
            jrow["mc"] = row.mc_estimate;
            jrow["se"] = row.std_error;
            jrow["z"] = row.z;
            rows.push_back(jrow);
        }
        out["isomorphism_mc"] = rows;
        pass = pass && rep.pass;
    }

    // Loop-soup law and occupation-field moments along the delta schedule.
    {
        std::vector<pf::SignedMeasure> measures = {pf::SignedMeasure::delta(k2.size(), 0)};
        const auto rep = pf::verify_permanental_moments(
            k2, opts.alpha, measures, 3, opts.samples, opts.delta_schedule, opts.seed,
            opts.threads);
        ordered_json rows = ordered_json::array();
        for (const auto& row : rep.rows) {
            ordered_json jrow;
            jrow["tuple"] = row.tuple;
            jrow["delta"] = row.delta;
            jrow["empirical"] = row.empirical;
            jrow["cutoff_exact"] = row.cutoff_exact;
            jrow["limit_exact"] = row.limit_exact;
            jrow["z_cutoff"] = row.z_cutoff;
            rows.push_back(jrow);
        }
        out["soup_moments"] = rows;
        out["soup_failures"] = rep.failures;
        pass = pass && rep.pass;
    }

    out["pass"] = pass;
    emit(opts, out.dump(2));
    return pass ? kExitPass : kExitNumericFailure;
}

int cmd_soup(const CommonOpts& opts) {
    const pf::MarkovModel model = load_model(opts);
    pf::SoupSampler sampler(model, opts.alpha, opts.delta);
    pf::Rng rng(opts.seed);
    const pf::LoopSoup soup = sampler.sample(rng);
    emit(opts, pf::soup_to_jsonl(soup));
    return kExitPass;
}

int cmd_norms(const CommonOpts& opts) {
    const pf::MarkovModel model = load_model(opts);
    const auto measures = load_measures(opts, model);
    const pf::PotentialKernel kernel = pf::potential_kernel(model);

    ordered_json out;
    out["engine_version"] = kEngineVersion;
    ordered_json rows = ordered_json::array();
    for (const auto& [name, nu] : measures) {
        ordered_json row;
        row["measure"] = name;
        row["u2_inf"] = pf::norm_u2_inf(kernel, nu);
        row["zero"] = pf::norm_zero(kernel, nu);
        row["pi_ubar"] = pf::norm_pi_ubar(kernel, nu);
        try {
            row["two_pd"] = pf::norm_two_pd(kernel, nu);
        } catch (const pf::NotPositiveDefinite&) {
            row["two_pd"] = nullptr;
        }
        row["w"] = pf::norm_w(model, nu);
        row["phi"] = pf::norm_phi(model, nu);
        rows.push_back(row);
    }
    out["norms"] = rows;

    std::ostringstream csv;
    csv << "n,trial,ratio,norm_kind\n";
    if (opts.probe) {
        ordered_json probes = ordered_json::array();
        for (const auto kind : {pf::NormKind::u2_inf, pf::NormKind::zero}) {
            pf::Rng rng(opts.seed, static_cast<int>(kind));
            const auto norm = pf::make_norm(kind, model);
            const auto rep = pf::proper_constant_probe(kernel, norm, rng, 6, 200);
            ordered_json jrep;
            jrep["norm_kind"] = pf::norm_kind_name(kind);
            jrep["orders"] = rep.orders;
            jrep["max_ratio"] = rep.max_ratio;
            jrep["c_fit"] = rep.c_fit;
            jrep["fitted_c"] = rep.fitted_c;
            jrep["stable"] = rep.stable;
            probes.push_back(jrep);
            for (const auto& t : rep.trials)
                csv << t.n << "," << t.trial << "," << t.ratio << ","
                    << pf::norm_kind_name(kind) << "\n";
        }
        out["probes"] = probes;
    }

    emit(opts, opts.format == "csv" ? csv.str() : out.dump(2));
    return kExitPass;
}

int cmd_levy_report(const CommonOpts& opts) {
    pf::LatticeKernel kernel = [&] {
        if (opts.kernel_path.empty()) return pf::LatticeKernel::rw(1, 64, 1.0);
        const auto j = nlohmann::json::parse(pf::read_text_file(opts.kernel_path));
        return pf::lattice_kernel_from_json(j);
    }();

    Eigen::VectorXd nu = Eigen::VectorXd::Zero(kernel.points());
    nu(0) = 1.0;
    if (!opts.measures_path.empty()) {
        const auto j = nlohmann::json::parse(pf::read_text_file(opts.measures_path));
        for (const auto& [key, value] : j.items())
            nu(std::stoi(key)) = value.get<double>();
    }

    const Eigen::VectorXd gamma = pf::gamma_convolution(kernel);

    ordered_json out;
    out["engine_version"] = kEngineVersion;
    out["dft_convention"] =
        "forward: unnormalized sum over sites; inverse carries 1/N^d; radial "
        "frequency coordinate q_i = (N/pi) sin(pi xi_i / N)";
    out["d"] = kernel.dim();
    out["N"] = kernel.side();
    out["beta"] = kernel.beta();

    out["gamma_sup"] = gamma.maxCoeff();
    out["gamma_sup_bound_sum_uhat2"] = kernel.u_hat_abs().squaredNorm();

    out["norm_gamma2"] = pf::norm_gamma2(kernel, gamma, nu);
    const auto sect = pf::norm_sect2(kernel, nu);
    out["norm_sect2"] = sect.value;
    out["sectorial_constant"] = sect.sectorial_constant;
    if (!sect.sectorial_ok)
        out["sectorial_warning"] = "sectorial constant >= 1; ||.||_[2] not backed";

    out["b101"] = pf::b101_integral(kernel, gamma, nu);

    const auto fit = pf::tau_fit(kernel, gamma);
    ordered_json jfit;
    jfit["slope"] = fit.slope;
    jfit["intercept"] = fit.intercept;
    jfit["residual_band"] = fit.residual_band;
    jfit["lemma71_premise"] = fit.lemma71_premise;
    jfit["lemma73_bound"] = fit.lemma73_bound;
    jfit["lemma73a_constant"] = fit.lemma73a_constant;
    out["tau_fit"] = jfit;

    ordered_json table = ordered_json::array();
    std::ostringstream csv;
    csv << "delta,phi,omega\n";
    for (double delta = 0.5; delta > 1.0 / kernel.side(); delta /= 2.0) {
        ordered_json row;
        const double phi = pf::phi_delta(kernel, gamma, nu, delta);
        const double omega = pf::omega_delta(kernel, gamma, nu, delta);
        row["delta"] = delta;
        row["phi"] = phi;
        row["omega"] = omega;
        table.push_back(row);
        csv << delta << "," << phi << "," << omega << "\n";
    }
    out["modulus_table"] = table;

    // Example templates: predicted modulus index vs measured translation
    // exponent (side-by-side; diagnostic only).
    {
        const int points = kernel.points();
        Eigen::VectorXcd nu_hat =
            pf::dft_forward(nu.cast<std::complex<double>>(), kernel.dim(), kernel.side());
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int count = 0;
        for (int i = 0; i < points; ++i) {
            const double q = kernel.chord_radius(i);
            if (q < kernel.max_chord_radius() / 2.0 || std::abs(nu_hat(i)) < 1e-14)
                continue;
            const double x = std::log(q), y = std::log(std::abs(nu_hat(i)));
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++count;
        }
        const double beta_idx =
            count >= 2 ? -((count * sxy - sx * sy) / (count * sxx - sx * sx)) : 0.0;
        const double alpha_idx = fit.slope;
        const int d = kernel.dim();
        ordered_json ex;
        ex["tau_index"] = alpha_idx;
        ex["nu_hat_decay_index"] = beta_idx;
        ex["case1_applicable"] = alpha_idx > d / 2.0 && alpha_idx < d;
        ex["case2_applicable"] = (d == 2) && std::abs(alpha_idx - 2.0) < 0.3;
        ex["case3_applicable"] =
            alpha_idx > d / 2.0 && alpha_idx < d && alpha_idx + beta_idx > d;
        ex["case4_applicable"] = (d == 2) && std::abs(alpha_idx - 2.0) < 0.3 && beta_idx > 0;
        ex["predicted_modulus_index"] = alpha_idx + beta_idx - d;
        ordered_json side_by_side = ordered_json::array();
        pf::LatticeKernel* kp = &kernel;
        for (int h = 1; h <= kernel.side() / 4; h *= 2) {
            // || nu_h - nu ||_{gamma,2} against omega(h/N).
            Eigen::VectorXd shifted = Eigen::VectorXd::Zero(points);
            for (int s = 0; s < points; ++s)
                shifted((s + h) % kernel.side()) = nu(s);  // 1-d translate
            const double measured =
                kernel.dim() == 1
                    ? pf::norm_gamma2(*kp, gamma, (shifted - nu).eval())
                    : 0.0;
            ordered_json row;
            row["h_sites"] = h;
            row["delta"] = static_cast<double>(h) / kernel.side();
            row["measured_translation_norm"] = measured;
            row["predicted_omega"] =
                pf::omega_delta(kernel, gamma, nu, static_cast<double>(h) / kernel.side());
            side_by_side.push_back(row);
        }
        ex["translation_vs_omega"] = side_by_side;
        out["example_templates"] = ex;
    }

    emit(opts, opts.format == "csv" ? csv.str() : out.dump(2));
    return kExitPass;
}

int cmd_caf_demo(const CommonOpts& opts) {
    const int n_side = 32;
    Eigen::VectorXd nu = Eigen::VectorXd::Zero(n_side);
    nu(0) = 1.0;
    const auto rep = pf::caf_field_demo(n_side, 1.0, nu, opts.samples / 100 + 10,
                                        {0.25, 0.5, 1.0}, {1, 2, 4, 8}, opts.seed);
    ordered_json out;
    out["engine_version"] = kEngineVersion;
    out["diagnostic_only"] = rep.diagnostic_only;
    out["paths"] = rep.paths;
    out["seed"] = rep.seed;
    ordered_json rows = ordered_json::array();
    for (const auto& row : rep.rows) {
        ordered_json jrow;
        jrow["delta"] = row.delta;
        jrow["max_increment"] = row.max_increment;
        jrow["omega"] = row.omega;
        jrow["ratio"] = row.ratio;
        rows.push_back(jrow);
    }
    out["rows"] = rows;
    emit(opts, out.dump(2));
    return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"permanental fields, loop soups and CAF verification"};
    app.require_subcommand(1);

    CommonOpts opts;

    auto add_common = [&](CLI::App* cmd, bool needs_seed) {
        cmd->add_option("--model", opts.model_path, "model spec JSON");
        cmd->add_option("--measures", opts.measures_path, "measures JSON");
        cmd->add_option("--alpha", opts.alpha, "soup intensity");
        cmd->add_option("--delta", opts.delta, "lifetime cutoff");
        cmd->add_option("--delta-schedule", opts.delta_schedule,
                        "cutoff schedule (descending)");
        cmd->add_option("--samples", opts.samples, "sample count");
        cmd->add_option("--threads", opts.threads, "worker threads (0 = all)");
        cmd->add_option("--out", opts.out_path, "output path (default stdout)");
        cmd->add_option("--format", opts.format, "json|csv")
            ->check(CLI::IsMember({"json", "csv"}));
        auto* seed = cmd->add_option("--seed", opts.seed, "RNG seed");
        if (needs_seed) seed->required();
    };

    auto* moments = app.add_subcommand("moments", "exact moment tables");
    add_common(moments, false);

    auto* verify = app.add_subcommand("verify", "statistical verification suites");
    add_common(verify, true);
    verify->add_option("--corrupt-u", opts.corrupt_u,
                       "perturb the LHS kernel (fault injection)");

    auto* soup = app.add_subcommand("soup", "sample one loop soup as JSON lines");
    add_common(soup, true);

    auto* norms = app.add_subcommand("norms", "norm evaluations and probes");
    add_common(norms, false);
    norms->add_flag("--probe", opts.probe, "run proper-constant probes");

    auto* levy = app.add_subcommand("levy-report", "lattice Levy kernel report");
    add_common(levy, false);
    levy->add_option("--kernel", opts.kernel_path, "kernel spec JSON");

    auto* caf = app.add_subcommand("caf-demo", "CAF modulus demo on the torus walk");
    add_common(caf, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return kExitUsage;
    }

    // A probe run is stochastic: require an explicit seed.
    if (norms->parsed() && opts.probe && norms->count("--seed") == 0) {
        std::cerr << "norms --probe requires --seed" << std::endl;
        return kExitUsage;
    }

    try {
        if (moments->parsed()) return cmd_moments(opts);
        if (verify->parsed()) return cmd_verify(opts);
        if (soup->parsed()) return cmd_soup(opts);
        if (norms->parsed()) return cmd_norms(opts);
        if (levy->parsed()) return cmd_levy_report(opts);
        if (caf->parsed()) return cmd_caf_demo(opts);
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "input error: " << e.what() << std::endl;
        return kExitUsage;
    } catch (const pf::ModelError& e) {
        std::cerr << "model error: " << e.what() << std::endl;
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << std::endl;
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "numeric failure: " << e.what() << std::endl;
        return kExitNumericFailure;
    }
    return kExitUsage;
}
