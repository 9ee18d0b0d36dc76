#pragma once

// Command-line front end. run_cli returns the process exit code:
// 0 success, 1 usage error (synopsis on the error stream), 2 runtime failure.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "epsbench/harness.hpp"

namespace epsbench {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

namespace detail {

class UsageError : public std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline EpsilonMachine load_machine(const std::string& path) { return deserialize(read_text_file(path)); }

inline void write_text(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path);
    f << text;
}

// Flags shared by several subcommands; only the ones given override the
// config file.
struct CommonFlags {
    std::uint64_t seed = 0;
    std::string out;
    std::int32_t machines = 0;
    std::vector<std::int32_t> candidates;
    double alpha = 1.0;
    std::int32_t m_max = 0;
    std::int64_t train_len = 0;
    std::int64_t test_len = 0;
    std::int32_t workers = 1;
    std::string config;

    CLI::Option* o_seed = nullptr;
    CLI::Option* o_out = nullptr;
    CLI::Option* o_machines = nullptr;
    CLI::Option* o_candidates = nullptr;
    CLI::Option* o_alpha = nullptr;
    CLI::Option* o_m_max = nullptr;
    CLI::Option* o_train_len = nullptr;
    CLI::Option* o_test_len = nullptr;
    CLI::Option* o_workers = nullptr;
    CLI::Option* o_config = nullptr;
};

inline void add_experiment_flags(CLI::App& app, CommonFlags& f) {
    f.o_seed = app.add_option("--seed", f.seed, "Master seed");
    f.o_out = app.add_option("--out", f.out, "Output directory");
    f.o_machines = app.add_option("--machines", f.machines, "Machines per candidate-size group");
    f.o_candidates = app.add_option("--candidates", f.candidates, "Candidate state counts")->delimiter(',');
    f.o_alpha = app.add_option("--alpha", f.alpha, "Dirichlet concentration");
    f.o_m_max = app.add_option("--m-max", f.m_max, "Largest history length");
    f.o_train_len = app.add_option("--train-len", f.train_len, "Training symbols per predictor");
    f.o_test_len = app.add_option("--test-len", f.test_len, "Held-out symbols per predictor");
    f.o_workers = app.add_option("--workers", f.workers, "Worker threads");
    f.o_config = app.add_option("--config", f.config, "JSON config file")->check(CLI::ExistingFile);
}

// Defaults, then the config file, then explicit flags.
inline ExperimentConfig resolve_config(ExperimentKind kind, const CommonFlags& f) {
    auto c = ExperimentConfig::defaults_for(kind);
    if (f.o_config && f.o_config->count()) {
        load_config_file(c, f.config);
        c.experiment = kind;
    }
    if (f.o_seed->count()) c.seed = f.seed;
    if (f.o_out->count()) c.out_dir = f.out;
    if (f.o_machines->count()) c.machines = f.machines;
    if (f.o_candidates->count()) c.candidate_sizes = f.candidates;
    if (f.o_alpha->count()) c.alpha = f.alpha;
    if (f.o_m_max->count()) c.m_max = f.m_max;
    if (f.o_train_len->count()) c.train_len = f.train_len;
    if (f.o_test_len->count()) c.test_len = f.test_len;
    if (f.o_workers->count()) c.workers = f.workers;
    try {
        c.check();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    return c;
}

inline std::string single_run_manifest(std::string_view command, nlohmann::ordered_json config,
                                       nlohmann::ordered_json seeds) {
    nlohmann::ordered_json m;
    m["tool"] = "epsbench";
    m["version"] = kVersion;
    m["command"] = command;
    m["config"] = std::move(config);
    m["seeds"] = std::move(seeds);
    return m.dump(2) + '\n';
}

// Writes `<path>.manifest.json` next to an output file; nothing for stdout.
inline void write_side_manifest(const std::string& path, const std::string& manifest) {
    if (path.empty() || path == "-") return;
    std::ofstream f(path + ".manifest.json");
    f << manifest;
}

}  // namespace detail

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"epsbench: epsilon-machine prediction benchmarks", "epsbench"};
    app.require_subcommand(1);
    app.fallthrough(false);

    // sample
    auto* sample = app.add_subcommand("sample", "Sample a random unifilar machine");
    SamplerConfig sc;
    std::string sample_out;
    sample->add_option("--candidates", sc.n_candidates, "Candidate states")->capture_default_str();
    sample->add_option("--alpha", sc.alpha, "Dirichlet concentration")->capture_default_str();
    sample->add_option("--alphabet", sc.alphabet_size, "Alphabet size")->capture_default_str();
    sample->add_option("--seed", sc.seed, "Seed")->capture_default_str();
    sample->add_option("--out", sample_out, "Machine file (stdout when omitted)");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "Entropy rate, minimal error and myopic curve of a machine");
    std::string analyze_path, analyze_out;
    std::int32_t analyze_m_max = -1;
    analyze->add_option("machine", analyze_path, "Machine file")->required()->check(CLI::ExistingFile);
    analyze->add_option("--m-max", analyze_m_max, "Also emit the Fano curve up to this history length");
    analyze->add_option("--out", analyze_out, "Curve CSV path (stdout when omitted)");

    // simulate
    auto* sim = app.add_subcommand("simulate", "Generate a symbol series from a machine");
    std::string sim_path, sim_out;
    std::size_t sim_len = 10000;
    std::uint64_t sim_seed = 0;
    sim->add_option("machine", sim_path, "Machine file")->required()->check(CLI::ExistingFile);
    sim->add_option("--length", sim_len, "Number of symbols")->capture_default_str();
    sim->add_option("--seed", sim_seed, "Seed")->capture_default_str();
    sim->add_option("--out", sim_out, "Series file")->required();

    // renewal
    auto* ren = app.add_subcommand("renewal", "Fano curve of a power-law renewal process");
    double ren_beta = 1.0;
    std::int32_t ren_n_max = kDefaultRenewalNMax, ren_m_max = 15;
    std::string ren_out;
    ren->add_option("--beta", ren_beta, "Survival exponent")->capture_default_str();
    ren->add_option("--n-max", ren_n_max, "Truncation of the interevent count")->capture_default_str();
    ren->add_option("--m-max", ren_m_max, "Largest history length")->capture_default_str();
    ren->add_option("--out", ren_out, "Curve CSV path (stdout when omitted)");

    // train
    auto* train = app.add_subcommand("train", "Train one predictor on simulated data and report held-out error");
    std::string train_path, train_family = "NGRC", train_out;
    std::int32_t train_m = 10;
    std::int64_t train_len = 200000, test_len = 20000;
    std::uint64_t train_seed = 0;
    train->add_option("machine", train_path, "Machine file")->required()->check(CLI::ExistingFile);
    train->add_option("--family", train_family, "NGRC, RC_QUADRATIC, RC_LINEAR or LSTM")->capture_default_str();
    train->add_option("--ngrc-m", train_m, "NG-RC window; sets the matched sizes")->capture_default_str();
    train->add_option("--train-len", train_len, "Training symbols")->capture_default_str();
    train->add_option("--test-len", test_len, "Held-out symbols")->capture_default_str();
    train->add_option("--seed", train_seed, "Seed")->capture_default_str();
    train->add_option("--out", train_out, "Write the trained predictor here");

    // experiment
    auto* exp = app.add_subcommand("experiment", "Run a figure-style experiment");
    std::string exp_name;
    exp->add_option("name", exp_name, "fig3, fig4, fig5 or survey")
        ->required()
        ->check(CLI::IsMember({"fig3", "fig4", "fig5", "survey"}));
    detail::CommonFlags flags;
    detail::add_experiment_flags(*exp, flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    try {
        if (*sample) {
            const auto r = sample_epsilon_machine(sc);
            detail::write_text(sample_out, serialize(r.machine), out);
            detail::write_side_manifest(
                sample_out, detail::single_run_manifest("sample",
                                                        {{"n_candidates", sc.n_candidates},
                                                         {"alpha", sc.alpha},
                                                         {"alphabet_size", sc.alphabet_size},
                                                         {"seed", sc.seed}},
                                                        {{"seed", sc.seed}}));
            err << "n_recurrent=" << r.n_recurrent << " transient_fraction=" << format_number(r.transient_fraction)
                << '\n';
        } else if (*analyze) {
            const auto m = detail::load_machine(analyze_path);
            const auto pi = stationary_distribution(m);
            const double pe_min = min_error_probability(m, pi);
            std::ostringstream os;
            os.setf(std::ios::fixed);
            os.precision(4);
            os << "n_states=" << m.n_states() << '\n'
               << "h_mu=" << entropy_rate(m, pi) << " nats\n"
               << "pe_min=" << pe_min << '\n';
            if (analyze_m_max >= 0) {
                const auto csv = curve_csv(fano_curve(myopic_entropy_rate(m, pi, analyze_m_max), pe_min));
                if (analyze_out.empty()) {
                    out << os.str() << csv;
                } else {
                    out << os.str();
                    detail::write_text(analyze_out, csv, out);
                    detail::write_side_manifest(
                        analyze_out, detail::single_run_manifest(
                                         "analyze", {{"machine", analyze_path}, {"m_max", analyze_m_max}}, {}));
                }
            } else {
                out << os.str();
            }
        } else if (*sim) {
            const auto m = detail::load_machine(sim_path);
            const auto s = simulate(m, sim_len, sim_seed, {false, sim_path});
            if (const auto dir = std::filesystem::path(sim_out).parent_path(); !dir.empty())
                std::filesystem::create_directories(dir);
            write_series(sim_out, s);
            detail::write_side_manifest(
                sim_out, detail::single_run_manifest("simulate", {{"machine", sim_path}, {"length", sim_len}},
                                                     {{"seed", sim_seed}}));
        } else if (*ren) {
            const auto spec = SurvivalSpec::power_law(ren_beta, ren_n_max);
            try {
                check(spec);
            } catch (const DegenerateSpec& e) {
                throw detail::UsageError(e.what());
            }
            const auto curve = renewal_fano_curve(spec, ren_m_max);
            detail::write_text(ren_out, renewal_curve_csv(curve), out);
            detail::write_side_manifest(
                ren_out, detail::single_run_manifest(
                             "renewal", {{"beta", ren_beta}, {"n_max", ren_n_max}, {"m_max", ren_m_max}}, {}));
        } else if (*train) {
            Family family;
            try {
                family = parse_family(train_family);
            } catch (const std::invalid_argument& e) {
                throw detail::UsageError(e.what());
            }
            if (train_len < 1 || test_len < 1) throw detail::UsageError("train and test lengths must be >= 1");
            ExperimentConfig c;
            c.ngrc_m = train_m;
            try {
                c.check();
            } catch (const std::invalid_argument& e) {
                throw detail::UsageError(e.what());
            }
            const auto m = detail::load_machine(train_path);
            const auto pi = stationary_distribution(m);
            const auto washout = static_cast<std::size_t>(std::max(c.washout, train_m));
            const auto n_train = static_cast<std::size_t>(train_len), n_test = static_cast<std::size_t>(test_len);
            const auto series =
                simulate(m, pi, washout + n_train + n_test, derive_seed(train_seed, "series"), {false, train_path})
                    .symbols;
            auto spec = c.predictor_spec(family);
            spec.reservoir.seed = derive_seed(train_seed, "reservoir");
            spec.lstm.seed = derive_seed(train_seed, "lstm");
            const auto p = train_predictor(spec, series, washout, washout + n_train);
            const double pe = evaluate_error_rate(p, series, washout + n_train, series.size());
            const double pe_min = min_error_probability(m, pi);
            out << "family=" << family_name(family) << " feature_count=" << spec.feature_count()
                << " pe=" << format_number(pe) << " pe_min=" << format_number(pe_min) << '\n';
            if (!train_out.empty()) {
                detail::write_text(train_out, dump_predictor(p), out);
                detail::write_side_manifest(
                    train_out, detail::single_run_manifest("train",
                                                           {{"machine", train_path},
                                                            {"family", family_name(family)},
                                                            {"ngrc_m", train_m},
                                                            {"train_len", train_len},
                                                            {"test_len", test_len}},
                                                           {{"seed", train_seed}}));
            }
        } else if (*exp) {
            const auto config = detail::resolve_config(parse_experiment(exp_name), flags);
            const auto result = run_experiment(config);
            write_result(result, config.out_dir);
            out << "wrote " << result.tables.size() << " tables to " << config.out_dir << '\n';
            if (!result.failures.empty()) {
                err << result.failures.size() << " unit(s) failed; see failures.json\n";
                return kExitRuntime;
            }
        }
    } catch (const detail::UsageError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}

}  // namespace epsbench
