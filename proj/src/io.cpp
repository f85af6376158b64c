#include "pbd/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace pbd {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string model_to_json(const PbdModel& model) {
    std::ostringstream os;
    os << "{\"n\": " << model.n() << ", \"components\": [";
    bool first = true;
    for (const auto& c : model.components()) {
        if (!first) os << ", ";
        first = false;
        os << "{\"p\": " << format_double(c.p) << ", \"multiplicity\": " << c.multiplicity
           << "}";
    }
    os << "]}";
    return os.str();
}

PbdModel model_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    if (!j.contains("n") || !j.contains("components")) {
        throw std::invalid_argument("model JSON needs 'n' and 'components'");
    }
    const long long n = j.at("n").get<long long>();
    std::vector<PbdComponent> comps;
    for (const auto& cj : j.at("components")) {
        comps.push_back({cj.at("p").get<double>(), cj.at("multiplicity").get<long long>()});
    }
    PbdModel model = PbdModel::from_components(std::move(comps));
    if (model.n() != n) throw std::invalid_argument("model JSON: multiplicities do not sum to n");
    return model;
}

std::string sketch_to_json(const FourierSketch& sk) {
    std::ostringstream os;
    os << "{\"M\": " << sk.modulus() << ", \"L\": " << sk.halfwidth() << ", \"coeffs\": [";
    for (long long xi = -sk.halfwidth(); xi <= sk.halfwidth(); ++xi) {
        if (xi != -sk.halfwidth()) os << ", ";
        const auto c = sk.coeff(xi);
        os << "[" << format_double(c.real()) << ", " << format_double(c.imag()) << "]";
    }
    os << "]}";
    return os.str();
}

FourierSketch sketch_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    FourierSketch sk(j.at("M").get<long long>(), j.at("L").get<long long>());
    const auto& coeffs = j.at("coeffs");
    if (static_cast<long long>(coeffs.size()) != 2 * sk.halfwidth() + 1) {
        throw std::invalid_argument("sketch JSON: wrong number of coefficients");
    }
    long long xi = -sk.halfwidth();
    for (const auto& cj : coeffs) {
        sk.set_coeff(xi++, {cj.at(0).get<double>(), cj.at(1).get<double>()});
    }
    return sk;
}

std::string report_to_json(const LearnReport& report) {
    std::ostringstream os;
    os << "{\"regime\": \"" << report.regime << "\""
       << ", \"systems_tried\": " << report.systems_tried
       << ", \"systems_solved\": " << report.systems_solved
       << ", \"mu_tilde\": " << format_double(report.mu_tilde)
       << ", \"sigma_tilde\": " << format_double(report.sigma_tilde)
       << ", \"M\": " << report.modulus << ", \"L\": " << report.halfwidth
       << ", \"feasible_index\": " << report.feasible_index
       << ", \"wall_time_sec\": " << format_double(report.wall_time_sec)
       << ", \"model\": " << model_to_json(report.output) << "}";
    return os.str();
}

std::string sparsify_meta_to_json(const SparsifyResult& result, double tv_exact_value) {
    std::ostringstream os;
    os << "{\"distinct_before\": " << result.distinct_before
       << ", \"distinct_after\": " << result.distinct_after
       << ", \"tv_exact\": " << format_double(tv_exact_value)
       << ", \"mean_delta\": " << format_double(result.mean_delta)
       << ", \"var_delta\": " << format_double(result.var_delta) << ", \"fallback_bands\": [";
    for (std::size_t i = 0; i < result.fallback_bands.size(); ++i) {
        if (i) os << ", ";
        os << "\"" << result.fallback_bands[i] << "\"";
    }
    os << "]}";
    return os.str();
}

std::string error_to_json(const std::string& kind, const std::string& detail) {
    nlohmann::json j;  // parser-side escaping is convenient here
    j["error"] = kind;
    j["detail"] = detail;
    return j.dump();
}

std::string samples_to_text(const SampleSet& samples) {
    std::ostringstream os;
    for (long long v : samples.values) os << v << "\n";
    return os.str();
}

SampleSet samples_from_text(const std::string& text) {
    SampleSet out;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        out.values.push_back(std::stoll(line));
    }
    out.validate();
    return out;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << content;
    if (!f) throw std::runtime_error("write failed: " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

}  // namespace pbd
