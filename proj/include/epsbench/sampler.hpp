#pragma once

// Random epsilon-machines: uniform random unifilar topology over a pool of
// candidate states, Dirichlet emissions, trimmed to the largest recurrent
// component.

#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "epsbench/errors.hpp"
#include "epsbench/format.hpp"
#include "epsbench/graph.hpp"
#include "epsbench/machine.hpp"
#include "epsbench/parallel.hpp"
#include "epsbench/rng.hpp"
#include "epsbench/stats.hpp"

namespace epsbench {

struct SamplerConfig {
    std::int32_t n_candidates = 300;
    double alpha = 1.0;
    std::int32_t alphabet_size = 2;
    std::uint64_t seed = 0;
};

struct SampleReport {
    EpsilonMachine machine;
    std::int32_t n_candidates = 0;
    std::int32_t n_recurrent = 0;
    double transient_fraction = 0.0;
    std::int32_t n_recurrent_components_found = 0;
};

inline void check(const SamplerConfig& c) {
    if (c.n_candidates < 1) throw std::invalid_argument("n_candidates must be >= 1");
    if (!(c.alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
    if (c.alphabet_size < 1) throw std::invalid_argument("alphabet_size must be >= 1");
}

// Topology and emissions come from separate streams derived from the seed,
// so changing alpha leaves the candidate graph untouched.
inline SampleReport sample_epsilon_machine(const SamplerConfig& config) {
    check(config);
    const auto n = config.n_candidates;
    const auto k = config.alphabet_size;
    const auto cells = static_cast<std::size_t>(n) * k;

    CounterRng topology(derive_seed(config.seed, "topology"));
    std::vector<std::int32_t> next(cells);
    for (auto& t : next) t = static_cast<std::int32_t>(topology.index(static_cast<std::uint64_t>(n)));

    CounterRng emissions(derive_seed(config.seed, "emission"));
    std::vector<double> emission(cells);
    for (std::int32_t s = 0; s < n; ++s) {
        double total = 0.0;
        for (std::int32_t x = 0; x < k; ++x) total += emission[s * k + x] = emissions.gamma(config.alpha);
        if (total > 0.0) {
            for (std::int32_t x = 0; x < k; ++x) emission[s * k + x] /= total;
        } else {
            // Every gamma draw underflowed (only possible for tiny alpha).
            for (std::int32_t x = 0; x < k; ++x) emission[s * k + x] = 1.0 / k;
        }
    }
    // An emission that underflowed to exactly zero carries no transition.
    for (std::size_t c = 0; c < cells; ++c)
        if (emission[c] == 0.0) next[c] = kNoTransition;

    const EpsilonMachine candidate(n, k, emission, next);
    const auto scc = strongly_connected_components(candidate.support_graph());
    const auto best = largest_closed_component(scc);

    std::int32_t closed = 0;
    for (bool c : scc.is_closed) closed += c;

    const auto& keep = scc.members[best];
    std::vector<std::int32_t> new_index(n, -1);
    for (std::size_t i = 0; i < keep.size(); ++i) new_index[keep[i]] = static_cast<std::int32_t>(i);
    const auto m = static_cast<std::int32_t>(keep.size());
    std::vector<double> kept_emission(static_cast<std::size_t>(m) * k);
    std::vector<std::int32_t> kept_next(static_cast<std::size_t>(m) * k);
    for (std::int32_t i = 0; i < m; ++i)
        for (std::int32_t x = 0; x < k; ++x) {
            const auto old_cell = static_cast<std::size_t>(keep[i]) * k + x;
            kept_emission[i * k + x] = emission[old_cell];
            kept_next[i * k + x] = next[old_cell] == kNoTransition ? kNoTransition : new_index[next[old_cell]];
        }

    SampleReport report;
    report.machine = EpsilonMachine(m, k, std::move(kept_emission), std::move(kept_next));
    report.n_candidates = n;
    report.n_recurrent = m;
    report.transient_fraction = 1.0 - static_cast<double>(m) / static_cast<double>(n);
    report.n_recurrent_components_found = closed;
    return report;
}

// ---------------------------------------------------------------------------
// Survey

struct SurveyRow {
    std::int64_t machine_id = 0;
    std::uint64_t seed = 0;
    std::int32_t n_candidates = 0;
    std::int32_t n_recurrent = 0;
    double transient_fraction = 0.0;
    double h_mu = 0.0;
    double pe_min = 0.0;
};

struct SurveyResult {
    std::vector<SurveyRow> rows;
    Summary h_mu;
    Summary pe_min;
    Summary transient_fraction;
};

inline std::uint64_t survey_machine_seed(std::uint64_t master, std::int32_t n_candidates, std::size_t index) {
    return derive_seed(master, "survey/" + std::to_string(n_candidates), index);
}

inline SurveyRow analyze_sample(const SampleReport& r, std::int64_t id, std::uint64_t seed) {
    const auto pi = stationary_distribution(r.machine);
    return {id, seed, r.n_candidates, r.n_recurrent, r.transient_fraction, entropy_rate(r.machine, pi),
            min_error_probability(r.machine, pi)};
}

inline SurveyResult survey(const SamplerConfig& config, std::size_t n_machines, unsigned workers = 1) {
    if (n_machines < 1) throw std::invalid_argument("survey needs at least one machine");
    check(config);
    SurveyResult out;
    out.rows = parallel_map(n_machines, workers, [&](std::size_t i) {
        SamplerConfig c = config;
        c.seed = survey_machine_seed(config.seed, config.n_candidates, i);
        return analyze_sample(sample_epsilon_machine(c), static_cast<std::int64_t>(i), c.seed);
    });
    std::vector<double> h, pe, tf;
    for (const auto& r : out.rows) {
        h.push_back(r.h_mu);
        pe.push_back(r.pe_min);
        tf.push_back(r.transient_fraction);
    }
    out.h_mu = summarize(h);
    out.pe_min = summarize(pe);
    out.transient_fraction = summarize(tf);
    return out;
}

inline std::string survey_csv(const SurveyResult& result) {
    std::ostringstream os;
    os << "machine_id,seed,n_candidates,n_recurrent,transient_fraction,h_mu_nats,pe_min\n";
    for (const auto& r : result.rows)
        os << r.machine_id << ',' << r.seed << ',' << r.n_candidates << ',' << r.n_recurrent << ','
           << format_number(r.transient_fraction) << ',' << format_number(r.h_mu) << ','
           << format_number(r.pe_min) << '\n';
    return os.str();
}

}  // namespace epsbench
