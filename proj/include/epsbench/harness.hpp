#pragma once

// Experiment runner: sampling, analysis, simulation and prediction wired into
// reproducible runs that emit CSV tables plus a JSON manifest.
//
// Every work unit derives its seed from (master seed, experiment tag, unit
// index) and results are stored by unit index, so outputs do not depend on
// the worker count.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "epsbench/errors.hpp"
#include "epsbench/format.hpp"
#include "epsbench/generator.hpp"
#include "epsbench/infotheory.hpp"
#include "epsbench/parallel.hpp"
#include "epsbench/predictors.hpp"
#include "epsbench/renewal.hpp"
#include "epsbench/sampler.hpp"
#include "epsbench/stats.hpp"

namespace epsbench {

inline constexpr std::string_view kVersion = "1.0.0";

enum class ExperimentKind { SURVEY, MYOPIC_CURVES, RENEWAL_CURVES, PREDICTOR_COMPARISON };

inline std::string_view experiment_name(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::SURVEY: return "SURVEY";
        case ExperimentKind::MYOPIC_CURVES: return "MYOPIC_CURVES";
        case ExperimentKind::RENEWAL_CURVES: return "RENEWAL_CURVES";
        case ExperimentKind::PREDICTOR_COMPARISON: return "PREDICTOR_COMPARISON";
    }
    return "?";
}

inline ExperimentKind parse_experiment(std::string_view s) {
    for (auto k : {ExperimentKind::SURVEY, ExperimentKind::MYOPIC_CURVES, ExperimentKind::RENEWAL_CURVES,
                   ExperimentKind::PREDICTOR_COMPARISON})
        if (experiment_name(k) == s) return k;
    if (s == "survey") return ExperimentKind::SURVEY;
    if (s == "fig3") return ExperimentKind::MYOPIC_CURVES;
    if (s == "fig4") return ExperimentKind::RENEWAL_CURVES;
    if (s == "fig5") return ExperimentKind::PREDICTOR_COMPARISON;
    throw std::invalid_argument("unknown experiment '" + std::string(s) + "'");
}

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::MYOPIC_CURVES;
    std::uint64_t seed = 0;
    std::string out_dir = "results";
    std::int32_t workers = 1;

    // Sampling
    std::vector<std::int32_t> candidate_sizes{30, 300, 3000};
    std::int32_t machines = 100;
    double alpha = 1.0;
    std::int32_t alphabet_size = 2;
    std::int32_t m_max = 15;

    // Renewal curves
    double renewal_beta = 1.0;
    std::vector<std::int32_t> renewal_n_max{1000, 10000};
    double log_m_h_mu = 0.5;
    std::int32_t log_m_m_max = 10000;

    // Predictor comparison
    std::int32_t ngrc_m = 10;
    std::int64_t train_len = 200000;
    std::int64_t test_len = 20000;
    std::int32_t repetitions = 1;
    std::vector<Family> families{Family::NGRC, Family::RC_QUADRATIC, Family::RC_LINEAR, Family::LSTM};
    double l2_lambda = kDefaultL2Lambda;
    std::int32_t washout = 100;
    double nonlinear_fraction = 0.5;
    double spectral_radius = 0.99;
    double input_scale = 1.0;
    std::int32_t lstm_bptt_window = 32;
    double lstm_learning_rate = 1e-3;
    std::int32_t lstm_max_epochs = 40;
    std::int32_t lstm_batch_streams = 16;
    double lstm_clip_norm = 1.0;
    std::int32_t lstm_patience = 5;
    double lstm_validation_fraction = 0.1;
    std::int32_t lstm_validation_warmup = 1000;

    static ExperimentConfig defaults_for(ExperimentKind k) {
        ExperimentConfig c;
        c.experiment = k;
        c.workers = static_cast<std::int32_t>(default_workers());
        switch (k) {
            case ExperimentKind::SURVEY:
                c.candidate_sizes = {300};
                c.out_dir = "results/survey";
                break;
            case ExperimentKind::MYOPIC_CURVES: c.out_dir = "results/fig3"; break;
            case ExperimentKind::RENEWAL_CURVES: c.out_dir = "results/fig4"; break;
            case ExperimentKind::PREDICTOR_COMPARISON:
                c.candidate_sizes = {300};
                c.machines = 10;
                c.out_dir = "results/fig5";
                break;
        }
        return c;
    }

    void check() const {
        if (machines < 1) throw std::invalid_argument("machines must be >= 1");
        if (candidate_sizes.empty()) throw std::invalid_argument("candidate_sizes must not be empty");
        for (auto n : candidate_sizes)
            if (n < 1) throw std::invalid_argument("candidate sizes must be >= 1");
        if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
        if (m_max < 0 || m_max > kEnumerationCap - 1) throw std::invalid_argument("m_max must lie in [0, 19]");
        if (workers < 1) throw std::invalid_argument("workers must be >= 1");
        if (renewal_n_max.empty()) throw std::invalid_argument("renewal_n_max must not be empty");
        if (log_m_m_max < 0) throw std::invalid_argument("log_m_m_max must be >= 0");
        if (ngrc_m < 1 || ngrc_m > kEnumerationCap - 1) throw std::invalid_argument("ngrc_m must lie in [1, 19]");
        if (train_len < 1 || test_len < 1) throw std::invalid_argument("train_len and test_len must be >= 1");
        if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
        if (families.empty()) throw std::invalid_argument("families must not be empty");
        if (out_dir.empty()) throw std::invalid_argument("out_dir must not be empty");
    }

    // Spec for one family with this config's settings; seeds are set per unit.
    PredictorSpec predictor_spec(Family f) const {
        for (auto spec : matched_configs({ngrc_m})) {
            if (spec.family != f) continue;
            spec.l2_lambda = l2_lambda;
            spec.reservoir.washout = washout;
            spec.reservoir.nonlinear_fraction = nonlinear_fraction;
            spec.reservoir.spectral_radius = spectral_radius;
            spec.reservoir.input_scale = input_scale;
            spec.lstm.bptt_window = lstm_bptt_window;
            spec.lstm.learning_rate = lstm_learning_rate;
            spec.lstm.max_epochs = lstm_max_epochs;
            spec.lstm.batch_streams = lstm_batch_streams;
            spec.lstm.clip_norm = lstm_clip_norm;
            spec.lstm.patience = lstm_patience;
            spec.lstm.validation_fraction = lstm_validation_fraction;
            spec.lstm.validation_warmup = lstm_validation_warmup;
            return spec;
        }
        throw std::logic_error("family missing from matched configurations");
    }
};

// ---------------------------------------------------------------------------
// JSON mapping. Loading overlays the keys present onto an existing config and
// rejects unknown keys.

inline nlohmann::ordered_json to_json(const ExperimentConfig& c) {
    nlohmann::ordered_json j;
    j["experiment"] = experiment_name(c.experiment);
    j["seed"] = c.seed;
    j["out_dir"] = c.out_dir;
    j["workers"] = c.workers;
    j["candidate_sizes"] = c.candidate_sizes;
    j["machines"] = c.machines;
    j["alpha"] = c.alpha;
    j["alphabet_size"] = c.alphabet_size;
    j["m_max"] = c.m_max;
    j["renewal_beta"] = c.renewal_beta;
    j["renewal_n_max"] = c.renewal_n_max;
    j["log_m_h_mu"] = c.log_m_h_mu;
    j["log_m_m_max"] = c.log_m_m_max;
    j["ngrc_m"] = c.ngrc_m;
    j["train_len"] = c.train_len;
    j["test_len"] = c.test_len;
    j["repetitions"] = c.repetitions;
    std::vector<std::string> fams;
    for (auto f : c.families) fams.emplace_back(family_name(f));
    j["families"] = fams;
    j["l2_lambda"] = c.l2_lambda;
    j["washout"] = c.washout;
    j["nonlinear_fraction"] = c.nonlinear_fraction;
    j["spectral_radius"] = c.spectral_radius;
    j["input_scale"] = c.input_scale;
    j["lstm_bptt_window"] = c.lstm_bptt_window;
    j["lstm_learning_rate"] = c.lstm_learning_rate;
    j["lstm_max_epochs"] = c.lstm_max_epochs;
    j["lstm_batch_streams"] = c.lstm_batch_streams;
    j["lstm_clip_norm"] = c.lstm_clip_norm;
    j["lstm_patience"] = c.lstm_patience;
    j["lstm_validation_fraction"] = c.lstm_validation_fraction;
    j["lstm_validation_warmup"] = c.lstm_validation_warmup;
    return j;
}

inline void apply_json(ExperimentConfig& c, const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("experiment config must be a JSON object");
    for (const auto& [key, v] : j.items()) {
        try {
            if (key == "experiment") c.experiment = parse_experiment(v.get<std::string>());
            else if (key == "seed") c.seed = v.get<std::uint64_t>();
            else if (key == "out_dir") c.out_dir = v.get<std::string>();
            else if (key == "workers") c.workers = v.get<std::int32_t>();
            else if (key == "candidate_sizes") c.candidate_sizes = v.get<std::vector<std::int32_t>>();
            else if (key == "machines") c.machines = v.get<std::int32_t>();
            else if (key == "alpha") c.alpha = v.get<double>();
            else if (key == "alphabet_size") c.alphabet_size = v.get<std::int32_t>();
            else if (key == "m_max") c.m_max = v.get<std::int32_t>();
            else if (key == "renewal_beta") c.renewal_beta = v.get<double>();
            else if (key == "renewal_n_max") c.renewal_n_max = v.get<std::vector<std::int32_t>>();
            else if (key == "log_m_h_mu") c.log_m_h_mu = v.get<double>();
            else if (key == "log_m_m_max") c.log_m_m_max = v.get<std::int32_t>();
            else if (key == "ngrc_m") c.ngrc_m = v.get<std::int32_t>();
            else if (key == "train_len") c.train_len = v.get<std::int64_t>();
            else if (key == "test_len") c.test_len = v.get<std::int64_t>();
            else if (key == "repetitions") c.repetitions = v.get<std::int32_t>();
            else if (key == "families") {
                c.families.clear();
                for (const auto& f : v) c.families.push_back(parse_family(f.get<std::string>()));
            }
            else if (key == "l2_lambda") c.l2_lambda = v.get<double>();
            else if (key == "washout") c.washout = v.get<std::int32_t>();
            else if (key == "nonlinear_fraction") c.nonlinear_fraction = v.get<double>();
            else if (key == "spectral_radius") c.spectral_radius = v.get<double>();
            else if (key == "input_scale") c.input_scale = v.get<double>();
            else if (key == "lstm_bptt_window") c.lstm_bptt_window = v.get<std::int32_t>();
            else if (key == "lstm_learning_rate") c.lstm_learning_rate = v.get<double>();
            else if (key == "lstm_max_epochs") c.lstm_max_epochs = v.get<std::int32_t>();
            else if (key == "lstm_batch_streams") c.lstm_batch_streams = v.get<std::int32_t>();
            else if (key == "lstm_clip_norm") c.lstm_clip_norm = v.get<double>();
            else if (key == "lstm_patience") c.lstm_patience = v.get<std::int32_t>();
            else if (key == "lstm_validation_fraction") c.lstm_validation_fraction = v.get<double>();
            else if (key == "lstm_validation_warmup") c.lstm_validation_warmup = v.get<std::int32_t>();
            else throw std::invalid_argument("unknown config key '" + key + "'");
        } catch (const nlohmann::json::exception& e) {
            throw std::invalid_argument("config key '" + key + "': " + e.what());
        }
    }
}

inline void load_config_file(ExperimentConfig& c, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config file " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("config file " + path + ": " + e.what());
    }
    apply_json(c, j);
}

// ---------------------------------------------------------------------------
// Results

struct UnitFailure {
    std::string unit;
    std::string error;
};

struct ExperimentResult {
    ExperimentConfig config;
    std::vector<std::pair<std::string, std::string>> tables;  // file name, CSV text
    nlohmann::ordered_json seeds = nlohmann::ordered_json::array();
    nlohmann::ordered_json summary = nlohmann::ordered_json::object();
    std::vector<UnitFailure> failures;
    double wall_seconds = 0.0;

    const std::string& table(const std::string& name) const {
        for (const auto& [n, t] : tables)
            if (n == name) return t;
        throw std::out_of_range("no table " + name);
    }

    nlohmann::ordered_json manifest() const {
        nlohmann::ordered_json m;
        m["tool"] = "epsbench";
        m["version"] = kVersion;
        m["experiment"] = experiment_name(config.experiment);
        m["config"] = to_json(config);
        m["seeds"] = seeds;
        m["summary"] = summary;
        std::vector<std::string> files;
        for (const auto& t : tables) files.push_back(t.first);
        m["tables"] = files;
        m["failures"] = failures.size();
        m["wall_seconds"] = wall_seconds;
        return m;
    }
};

// Writes every table, manifest.json, and failures.json when units failed.
inline void write_result(const ExperimentResult& r, const std::string& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& [name, text] : r.tables) {
        std::ofstream out(std::filesystem::path(dir) / name, std::ios::binary);
        if (!out) throw Error("cannot write " + name + " in " + dir);
        out << text;
    }
    {
        std::ofstream out(std::filesystem::path(dir) / "manifest.json");
        out << r.manifest().dump(2) << '\n';
    }
    if (!r.failures.empty()) {
        nlohmann::ordered_json f = nlohmann::ordered_json::array();
        for (const auto& u : r.failures) f.push_back({{"unit", u.unit}, {"error", u.error}});
        std::ofstream out(std::filesystem::path(dir) / "failures.json");
        out << f.dump(2) << '\n';
    }
}

namespace detail {

inline std::string quantile_cells(std::vector<double> v) {
    const auto s = summarize(v);
    return format_number(s.q05) + ',' + format_number(s.q50) + ',' + format_number(s.q95);
}

inline nlohmann::ordered_json summary_json(const std::vector<double>& v) {
    const auto s = summarize(v);
    return {{"mean", s.mean}, {"stddev", s.stddev}, {"q05", s.q05}, {"q50", s.q50}, {"q95", s.q95}};
}

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Unit outcome that carries either a value or an error message.
template <class T>
struct Outcome {
    std::optional<T> value;
    std::string error;
};

template <class Fn>
auto guarded(Fn&& fn) -> Outcome<decltype(fn())> {
    try {
        return {fn(), {}};
    } catch (const std::exception& e) {
        return {std::nullopt, e.what()};
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Concentration survey: h_mu, P_e^min and transient fraction per machine.

inline ExperimentResult run_survey(const ExperimentConfig& config) {
    config.check();
    detail::Stopwatch clock;
    ExperimentResult r;
    r.config = config;
    std::ostringstream machines;
    machines << "machine_id,seed,n_candidates,n_recurrent,transient_fraction,h_mu_nats,pe_min\n";
    for (auto n : config.candidate_sizes) {
        const auto s = survey({n, config.alpha, config.alphabet_size, config.seed},
                              static_cast<std::size_t>(config.machines), static_cast<unsigned>(config.workers));
        std::vector<double> h, pe, tf;
        for (const auto& row : s.rows) {
            machines << row.machine_id << ',' << row.seed << ',' << row.n_candidates << ',' << row.n_recurrent << ','
                     << format_number(row.transient_fraction) << ',' << format_number(row.h_mu) << ','
                     << format_number(row.pe_min) << '\n';
            r.seeds.push_back({{"unit", "n" + std::to_string(n) + "/machine" + std::to_string(row.machine_id)},
                               {"seed", row.seed}});
            h.push_back(row.h_mu);
            pe.push_back(row.pe_min);
            tf.push_back(row.transient_fraction);
        }
        r.summary[std::to_string(n)] = {{"h_mu", detail::summary_json(h)},
                                        {"pe_min", detail::summary_json(pe)},
                                        {"transient_fraction", detail::summary_json(tf)}};
    }
    r.tables.emplace_back("machines.csv", machines.str());
    r.wall_seconds = clock.seconds();
    return r;
}

// ---------------------------------------------------------------------------
// Myopic-entropy curves with Fano percentage bands per candidate size.

inline constexpr std::string_view kMyopicCsvHeader =
    "n_candidates,machine_id,seed,n_recurrent,m,h_of_m_nats,h_mu_nats,pe_lower_bound,pe_min,pct_increase";
inline constexpr std::string_view kBandCsvHeader =
    "n_candidates,m,n_machines,h_of_m_q05,h_of_m_q50,h_of_m_q95,gap_q05,gap_q50,gap_q95,pct_q05,pct_q50,pct_q95";

inline ExperimentResult run_myopic_survey(const ExperimentConfig& config) {
    config.check();
    detail::Stopwatch clock;
    ExperimentResult r;
    r.config = config;
    std::ostringstream curves, bands;
    curves << kMyopicCsvHeader << '\n';
    bands << kBandCsvHeader << '\n';

    struct MachineCurve {
        std::uint64_t seed = 0;
        std::int32_t n_recurrent = 0;
        std::vector<FanoCurveRow> rows;
    };
    for (auto n : config.candidate_sizes) {
        const auto count = static_cast<std::size_t>(config.machines);
        const auto outcomes = parallel_map(count, static_cast<unsigned>(config.workers), [&](std::size_t i) {
            return detail::guarded([&] {
                MachineCurve mc;
                mc.seed = survey_machine_seed(config.seed, n, i);
                const auto s = sample_epsilon_machine({n, config.alpha, config.alphabet_size, mc.seed});
                const auto pi = stationary_distribution(s.machine);
                mc.n_recurrent = s.n_recurrent;
                mc.rows = fano_curve(myopic_entropy_rate(s.machine, pi, config.m_max),
                                     min_error_probability(s.machine, pi));
                return mc;
            });
        });
        std::vector<std::vector<double>> h(config.m_max + 1), gap(config.m_max + 1), pct(config.m_max + 1);
        for (std::size_t i = 0; i < count; ++i) {
            const auto unit = "n" + std::to_string(n) + "/machine" + std::to_string(i);
            r.seeds.push_back({{"unit", unit}, {"seed", survey_machine_seed(config.seed, n, i)}});
            const auto& o = outcomes[i];
            if (!o.value) {
                r.failures.push_back({unit, o.error});
                continue;
            }
            for (const auto& row : o.value->rows) {
                curves << n << ',' << i << ',' << o.value->seed << ',' << o.value->n_recurrent << ','
                       << curve_csv_row(row) << '\n';
                h[row.m].push_back(row.h_of_m);
                gap[row.m].push_back(row.h_of_m - row.h_mu);
                pct[row.m].push_back(row.pct_increase);
            }
        }
        nlohmann::ordered_json group;
        for (std::int32_t m = 0; m <= config.m_max && !h[m].empty(); ++m) {
            bands << n << ',' << m << ',' << h[m].size() << ',' << detail::quantile_cells(h[m]) << ','
                  << detail::quantile_cells(gap[m]) << ',' << detail::quantile_cells(pct[m]) << '\n';
        }
        if (!h[0].empty()) {
            group["h_of_0_median"] = median(h[0]);
            group["gap_at_m_max_median"] = median(gap[config.m_max]);
            group["pct_at_m_max_median"] = median(pct[config.m_max]);
            if (config.m_max >= 10) group["pct_at_10_median"] = median(pct[10]);
        }
        r.summary[std::to_string(n)] = group;
    }
    r.tables.emplace_back("myopic_curves.csv", curves.str());
    r.tables.emplace_back("myopic_bands.csv", bands.str());
    r.wall_seconds = clock.seconds();
    return r;
}

// ---------------------------------------------------------------------------
// Renewal-process and log-m curves.

inline ExperimentResult run_renewal_curves(const ExperimentConfig& config) {
    config.check();
    detail::Stopwatch clock;
    ExperimentResult r;
    r.config = config;
    const auto outcomes =
        parallel_map(config.renewal_n_max.size(), static_cast<unsigned>(config.workers), [&](std::size_t i) {
            return detail::guarded([&] {
                return renewal_fano_curve(SurvivalSpec::power_law(config.renewal_beta, config.renewal_n_max[i]),
                                          config.m_max);
            });
        });
    std::ostringstream renewal;
    renewal << kCurveCsvHeader << ",beta,n_max\n";
    nlohmann::ordered_json curves = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const auto unit = "renewal/n_max" + std::to_string(config.renewal_n_max[i]);
        if (!outcomes[i].value) {
            r.failures.push_back({unit, outcomes[i].error});
            continue;
        }
        const auto& c = *outcomes[i].value;
        for (const auto& row : c.rows) renewal << curve_csv_row(row) << ',' << renewal_parameter_cells(c.spec) << '\n';
        curves.push_back({{"n_max", c.spec.n_max},
                          {"h_mu", c.myopic.h_mu},
                          {"pe_min", c.pe_min},
                          {"pe_reference", c.pe_reference},
                          {"predictive_information_at_m_max", predictive_information(c.myopic, config.m_max)}});
    }
    r.summary["renewal"] = curves;

    const auto logm = log_m_process_curve(config.log_m_h_mu, config.log_m_m_max);
    const double ref = inverse_binary_entropy(config.log_m_h_mu);
    const auto rows = fano_curve(logm, ref);
    std::ostringstream lm;
    lm << kCurveCsvHeader << '\n';
    std::int32_t below_10 = -1;
    for (const auto& row : rows) {
        lm << curve_csv_row(row) << '\n';
        if (below_10 < 0 && row.pct_increase <= 10.0) below_10 = row.m;
    }
    r.summary["log_m"] = {{"h_mu", config.log_m_h_mu}, {"pe_reference", ref}, {"first_m_with_pct_at_most_10", below_10}};
    r.tables.emplace_back("renewal_curves.csv", renewal.str());
    r.tables.emplace_back("log_m_curve.csv", lm.str());
    r.wall_seconds = clock.seconds();
    return r;
}

// ---------------------------------------------------------------------------
// Predictor comparison at matched readout size.

inline std::uint64_t comparison_machine_seed(std::uint64_t master, std::size_t machine) {
    return derive_seed(master, "fig5/machine", machine);
}

// The Fano bound at a family's effective memory: the NG-RC sees m symbols;
// the recurrent families carry the whole past.
inline double family_fano_bound(Family f, const MyopicCurve& curve, std::int32_t ngrc_m) {
    const double ln2 = std::log(2.0);
    const double h = f == Family::NGRC ? curve[ngrc_m] : curve.h_mu;
    return inverse_binary_entropy(std::min(h, ln2));
}

inline ExperimentResult run_predictor_comparison(const ExperimentConfig& config) {
    config.check();
    detail::Stopwatch clock;
    ExperimentResult r;
    r.config = config;
    const std::int32_t n_candidates = config.candidate_sizes.front();
    const auto n_fam = config.families.size();
    const auto n_rep = static_cast<std::size_t>(config.repetitions);
    const auto units = static_cast<std::size_t>(config.machines) * n_fam * n_rep;
    const auto train_len = static_cast<std::size_t>(config.train_len);
    const auto test_len = static_cast<std::size_t>(config.test_len);
    const auto washout = static_cast<std::size_t>(std::max(config.washout, config.ngrc_m));

    const auto outcomes = parallel_map(units, static_cast<unsigned>(config.workers), [&](std::size_t u) {
        return detail::guarded([&] {
            const std::size_t machine = u / (n_fam * n_rep);
            const std::size_t rep = (u / n_fam) % n_rep;
            const Family family = config.families[u % n_fam];
            const auto seed = comparison_machine_seed(config.seed, machine);
            const auto s = sample_epsilon_machine({n_candidates, config.alpha, 2, seed});
            const auto pi = stationary_distribution(s.machine);
            const auto curve = myopic_entropy_rate(s.machine, pi, config.ngrc_m);
            const double pe_min = min_error_probability(s.machine, pi);
            const auto rep_seed = derive_seed(seed, "repetition", rep);
            const auto series =
                simulate(s.machine, pi, washout + train_len + test_len, derive_seed(rep_seed, "series"),
                         {false, "m" + std::to_string(machine)})
                    .symbols;
            auto spec = config.predictor_spec(family);
            spec.reservoir.seed = derive_seed(rep_seed, "reservoir");
            spec.lstm.seed = derive_seed(rep_seed, "lstm");
            const auto p = train_predictor(spec, series, washout, washout + train_len);
            PredictorResultRow row;
            row.machine_id = "m" + std::to_string(machine) + (n_rep > 1 ? "r" + std::to_string(rep) : "");
            row.family = family;
            row.feature_count = spec.feature_count();
            row.train_len = train_len;
            row.test_len = test_len;
            row.pe = evaluate_error_rate(p, series, washout + train_len, series.size());
            row.pe_min = pe_min;
            row.pct_increase = pe_min > 0.0 ? (row.pe - pe_min) / pe_min * 100.0
                                            : (row.pe > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
            row.fano_bound = family_fano_bound(family, curve, config.ngrc_m);
            return row;
        });
    });

    std::ostringstream csv;
    csv << kPredictorCsvHeader << '\n';
    std::map<Family, std::vector<double>> pct, gap_to_bound;
    for (std::size_t u = 0; u < units; ++u) {
        const std::size_t machine = u / (n_fam * n_rep);
        const auto unit = "machine" + std::to_string(machine) + "/rep" + std::to_string((u / n_fam) % n_rep) + "/" +
                          std::string(family_name(config.families[u % n_fam]));
        if (u % (n_fam * n_rep) == 0)
            r.seeds.push_back({{"unit", "machine" + std::to_string(machine)},
                               {"seed", comparison_machine_seed(config.seed, machine)}});
        const auto& o = outcomes[u];
        if (!o.value) {
            r.failures.push_back({unit, o.error});
            continue;
        }
        csv << predictor_csv_row(*o.value) << '\n';
        pct[o.value->family].push_back(o.value->pct_increase);
        gap_to_bound[o.value->family].push_back((o.value->pe - o.value->fano_bound) / o.value->fano_bound * 100.0);
    }
    std::ostringstream agg;
    agg << "family,n,pct_q05,pct_q50,pct_q95,over_fano_bound_q50\n";
    for (auto f : config.families) {
        if (pct[f].empty()) continue;
        agg << family_name(f) << ',' << pct[f].size() << ',' << detail::quantile_cells(pct[f]) << ','
            << format_number(median(gap_to_bound[f])) << '\n';
        r.summary[std::string(family_name(f))] = {{"pct_increase", detail::summary_json(pct[f])},
                                                  {"pct_over_fano_bound_median", median(gap_to_bound[f])}};
    }
    r.tables.emplace_back("predictor_results.csv", csv.str());
    r.tables.emplace_back("predictor_summary.csv", agg.str());
    r.wall_seconds = clock.seconds();
    return r;
}

inline ExperimentResult run_experiment(const ExperimentConfig& config) {
    switch (config.experiment) {
        case ExperimentKind::SURVEY: return run_survey(config);
        case ExperimentKind::MYOPIC_CURVES: return run_myopic_survey(config);
        case ExperimentKind::RENEWAL_CURVES: return run_renewal_curves(config);
        case ExperimentKind::PREDICTOR_COMPARISON: return run_predictor_comparison(config);
    }
    throw std::logic_error("unknown experiment");
}

}  // namespace epsbench
