#include "permfield/json_io.hpp"

#include <fstream>
#include <sstream>

namespace permfield {

ModelSpec model_spec_from_json(const nlohmann::json& j) {
    ModelSpec spec;
    spec.states = j.at("states").get<std::vector<std::string>>();
    const int n = static_cast<int>(spec.states.size());
    const auto rates = j.at("rates").get<std::vector<std::vector<double>>>();
    if (static_cast<int>(rates.size()) != n)
        throw ModelError("rates row count mismatch");
    spec.rates.resize(n, n);
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(rates[i].size()) != n)
            throw ModelError("rates column count mismatch");
        for (int k = 0; k < n; ++k) spec.rates(i, k) = rates[i][k];
    }
    const auto kill = j.at("kill").get<std::vector<double>>();
    const auto m = j.at("m").get<std::vector<double>>();
    if (static_cast<int>(kill.size()) != n || static_cast<int>(m.size()) != n)
        throw ModelError("kill/m length mismatch");
    spec.kill = Eigen::Map<const Eigen::VectorXd>(kill.data(), n);
    spec.m = Eigen::Map<const Eigen::VectorXd>(m.data(), n);
    return spec;
}

nlohmann::ordered_json model_spec_to_json(const ModelSpec& spec) {
    nlohmann::ordered_json j;
    j["states"] = spec.states;
    std::vector<std::vector<double>> rates;
    for (int i = 0; i < spec.rates.rows(); ++i) {
        std::vector<double> row;
        for (int k = 0; k < spec.rates.cols(); ++k) row.push_back(spec.rates(i, k));
        rates.push_back(std::move(row));
    }
    j["rates"] = rates;
    j["kill"] = std::vector<double>(spec.kill.data(), spec.kill.data() + spec.kill.size());
    j["m"] = std::vector<double>(spec.m.data(), spec.m.data() + spec.m.size());
    return j;
}

SignedMeasure measure_from_json(const nlohmann::json& j, const MarkovModel& model) {
    SignedMeasure nu = SignedMeasure::zero(model.size());
    for (const auto& [name, value] : j.items())
        nu.atoms(model.state_index(name)) = value.get<double>();
    return nu;
}

nlohmann::ordered_json measure_to_json(const SignedMeasure& nu,
                                       const MarkovModel& model) {
    nlohmann::ordered_json j;
    for (int i = 0; i < model.size(); ++i) j[model.states()[i]] = nu.atoms(i);
    return j;
}

std::vector<std::pair<std::string, SignedMeasure>> measures_from_json(
    const nlohmann::json& j, const MarkovModel& model) {
    std::vector<std::pair<std::string, SignedMeasure>> out;
    for (const auto& entry : j.at("measures")) {
        out.emplace_back(entry.at("name").get<std::string>(),
                         measure_from_json(entry.at("atoms"), model));
    }
    return out;
}

LatticeKernel lattice_kernel_from_json(const nlohmann::json& j) {
    const int d = j.at("d").get<int>();
    const int n = j.at("N").get<int>();
    const double beta = j.at("beta").get<double>();
    const auto& exponent = j.at("exponent");
    const std::string kind = exponent.at("kind").get<std::string>();
    const nlohmann::json params =
        exponent.contains("params") ? exponent.at("params") : nlohmann::json::object();

    if (kind == "rw") {
        const double rate = params.value("rate", -1.0);
        std::vector<double> drift;
        if (params.contains("drift"))
            drift = params.at("drift").get<std::vector<double>>();
        return LatticeKernel::rw(d, n, beta, rate, drift);
    }
    if (kind == "stable_surrogate") {
        const double alpha = params.at("alpha").get<double>();
        const double scale = params.value("scale", -1.0);
        return LatticeKernel::stable_surrogate(d, n, beta, alpha, scale);
    }
    if (kind == "table") {
        const auto re = params.at("re").get<std::vector<double>>();
        std::vector<double> im(re.size(), 0.0);
        if (params.contains("im")) im = params.at("im").get<std::vector<double>>();
        if (im.size() != re.size()) throw std::invalid_argument("table re/im mismatch");
        Eigen::VectorXcd kb(re.size());
        for (std::size_t i = 0; i < re.size(); ++i)
            kb(i) = std::complex<double>(re[i], im[i]);
        return LatticeKernel::from_table(d, n, beta, std::move(kb));
    }
    throw std::invalid_argument("unknown exponent kind: " + kind);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

}  // namespace permfield
