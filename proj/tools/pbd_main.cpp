#include <chrono>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "pbd/corpus.hpp"
#include "pbd/io.hpp"
#include "pbd/learner.hpp"
#include "pbd/oracle.hpp"
#include "pbd/rng.hpp"
#include "pbd/structure.hpp"

namespace {

int resolve_threads(int flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("PBD_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    return 1;
}

void check_epsilon(double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 0.5)) {
        throw std::invalid_argument("--epsilon must be in (0, 0.5)");
    }
}

pbd::PbdModel parse_params_spec(const std::string& spec) {
    // "0.3:2,0.5:1" -> components (p, multiplicity)
    std::vector<pbd::PbdComponent> comps;
    std::istringstream is(spec);
    std::string item;
    while (std::getline(is, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) {
            comps.push_back({std::stod(item), 1});
        } else {
            comps.push_back({std::stod(item.substr(0, colon)),
                             std::stoll(item.substr(colon + 1))});
        }
    }
    return pbd::PbdModel::from_components(std::move(comps));
}

pbd::PbdModel random_model(long long n, int distinct, std::uint64_t seed) {
    pbd::Rng rng(pbd::derive_seed(seed, 0x6e60d31ull));
    std::vector<pbd::PbdComponent> comps;
    long long left = n;
    for (int i = 0; i < distinct; ++i) {
        const bool last = i + 1 == distinct;
        long long m = last ? left
                           : 1 + static_cast<long long>(rng.next_below(
                                 static_cast<std::uint64_t>(left - (distinct - 1 - i))));
        comps.push_back({rng.next_double(), m});
        left -= m;
        if (left <= 0) break;
    }
    return pbd::PbdModel::from_components(std::move(comps));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Poisson binomial distribution learning toolkit"};
    app.require_subcommand(1);

    std::string model_path, model_b_path, samples_path, out_path, report_path, params_spec;
    double epsilon = 0.1;
    long long n = 0, count = 1000, max_systems = 1000000;
    std::uint64_t seed = 1;
    int distinct = 1, threads = 0, bench_count = 50;
    double constant_c = 10.0;
    std::uint64_t seed_base = 1;

    auto* gen = app.add_subcommand("gen", "generate a model JSON");
    gen->add_option("--n", n, "number of Bernoulli components");
    gen->add_option("--distinct", distinct, "distinct parameters for random models");
    gen->add_option("--params", params_spec, "explicit components p:mult,p:mult,...");
    gen->add_option("--seed", seed, "random seed");
    gen->add_option("--out", out_path, "output path")->required();

    auto* smp = app.add_subcommand("sample", "draw samples from a model");
    smp->add_option("--model", model_path)->required();
    smp->add_option("--count", count)->required();
    smp->add_option("--seed", seed);
    smp->add_option("--out", out_path)->required();

    auto* lrn = app.add_subcommand("learn", "learn a PBD from samples");
    lrn->add_option("--samples", samples_path)->required();
    lrn->add_option("--n", n)->required();
    lrn->add_option("--epsilon", epsilon);
    lrn->add_option("--seed", seed);
    lrn->add_option("--constant-c", constant_c);
    lrn->add_option("--max-systems", max_systems);
    lrn->add_option("--threads", threads);
    lrn->add_option("--out", out_path, "learned model JSON")->required();
    lrn->add_option("--report", report_path, "learn report JSON");

    auto* spr = app.add_subcommand("sparsify", "reduce a model to few distinct parameters");
    spr->add_option("--model", model_path)->required();
    spr->add_option("--epsilon", epsilon);
    spr->add_option("--seed", seed);
    spr->add_option("--out", out_path)->required();
    spr->add_option("--report", report_path, "metadata JSON");

    auto* tv = app.add_subcommand("tv", "exact total variation between two models");
    tv->add_option("model_a", model_path)->required();
    tv->add_option("model_b", model_b_path)->required();

    auto* demo = app.add_subcommand("demo-lowerbound", "Chebyshev-pair indistinguishability demo");
    demo->add_option("--n", n)->required();

    auto* bench = app.add_subcommand("bench", "run the seeded benchmark corpus");
    bench->add_option("--count", bench_count, "number of corpus models");
    bench->add_option("--epsilon", epsilon);
    bench->add_option("--seed-base", seed_base, "first corpus seed");
    bench->add_option("--threads", threads);
    bench->add_option("--out", out_path, "CSV path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            pbd::PbdModel model = params_spec.empty()
                                      ? random_model(n > 0 ? n : 100, distinct, seed)
                                      : parse_params_spec(params_spec);
            pbd::write_file(out_path, pbd::model_to_json(model) + "\n");
        } else if (smp->parsed()) {
            const auto model = pbd::model_from_json(pbd::read_file(model_path));
            const auto samples = pbd::sample(model, count, seed);
            pbd::write_file(out_path, pbd::samples_to_text(samples));
        } else if (lrn->parsed()) {
            check_epsilon(epsilon);
            auto samples = pbd::samples_from_text(pbd::read_file(samples_path));
            samples.n_hint = n;
            pbd::LearnConfig config;
            config.epsilon = epsilon;
            config.seed = seed;
            config.constant_c = constant_c;
            config.max_systems = max_systems;
            config.threads = resolve_threads(threads);
            config.sample_budget =
                std::min<long long>(config.default_sample_budget(),
                                    static_cast<long long>(samples.values.size()));
            try {
                const auto report = pbd::proper_learn(samples, n, config);
                pbd::write_file(out_path, pbd::model_to_json(report.output) + "\n");
                if (!report_path.empty()) {
                    pbd::write_file(report_path, pbd::report_to_json(report) + "\n");
                }
            } catch (const pbd::LearnExhausted& ex) {
                std::ostringstream os;
                os << "{\"error\": \"learner-exhausted\", \"detail\": \"" << ex.what()
                   << "\", \"systems_tried\": " << ex.systems_tried
                   << ", \"systems_solved\": " << ex.systems_solved
                   << ", \"mu_tilde\": " << pbd::format_double(ex.mu_tilde)
                   << ", \"sigma_tilde\": " << pbd::format_double(ex.sigma_tilde)
                   << ", \"M\": " << ex.modulus << ", \"L\": " << ex.halfwidth << "}";
                std::cerr << os.str() << std::endl;
                return 2;
            }
        } else if (spr->parsed()) {
            check_epsilon(epsilon);
            const auto model = pbd::model_from_json(pbd::read_file(model_path));
            pbd::SparsifyOptions opts;
            opts.seed = seed;
            const auto result = pbd::sparsify(model, epsilon, opts);
            pbd::write_file(out_path, pbd::model_to_json(result.model) + "\n");
            if (!report_path.empty()) {
                const double tvv = pbd::tv_exact(model, result.model);
                pbd::write_file(report_path,
                                pbd::sparsify_meta_to_json(result, tvv) + "\n");
            }
        } else if (tv->parsed()) {
            const auto a = pbd::model_from_json(pbd::read_file(model_path));
            const auto b = pbd::model_from_json(pbd::read_file(model_b_path));
            std::cout << pbd::format_double(pbd::tv_exact(a, b)) << std::endl;
        } else if (demo->parsed()) {
            const auto pair = pbd::chebyshev_pair(n);
            const double tvv = pbd::tv_exact(pair.p, pair.q);
            std::cout << "{\"n\": " << n << ", \"tv_exact\": " << pbd::format_double(tvv)
                      << ", \"min_param_gap\": " << pbd::format_double(pair.min_param_gap)
                      << "}" << std::endl;
        } else if (bench->parsed()) {
            check_epsilon(epsilon);
            std::ostringstream csv;
            csv << "seed,n,epsilon,regime,systems_tried,tv,wall_time\n";
            for (int i = 0; i < bench_count; ++i) {
                const std::uint64_t s = seed_base + static_cast<std::uint64_t>(i);
                const auto model = pbd::corpus_model(s);
                pbd::LearnConfig config;
                config.epsilon = epsilon;
                config.seed = s;
                config.threads = resolve_threads(threads);
                const auto samples =
                    pbd::sample(model, config.default_sample_budget(), s);
                std::string regime = "failed";
                long long tried = 0;
                double tvv = 1.0, wall = 0.0;
                try {
                    const auto report = pbd::proper_learn(samples, model.n(), config);
                    regime = report.regime;
                    tried = report.systems_tried;
                    wall = report.wall_time_sec;
                    tvv = pbd::tv_exact(model, report.output);
                } catch (const pbd::LearnExhausted& ex) {
                    tried = ex.systems_tried;
                }
                csv << s << "," << model.n() << "," << pbd::format_double(epsilon) << ","
                    << regime << "," << tried << "," << pbd::format_double(tvv) << ","
                    << pbd::format_double(wall) << "\n";
            }
            pbd::write_file(out_path, csv.str());
        }
    } catch (const std::exception& ex) {
        std::cerr << pbd::error_to_json("invalid-input", ex.what()) << std::endl;
        return 1;
    }
    return 0;
}
