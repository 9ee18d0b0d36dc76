#pragma once

// Symbol sequences sampled from an epsilon-machine, started in its stationary
// distribution.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "epsbench/errors.hpp"
#include "epsbench/machine.hpp"
#include "epsbench/rng.hpp"
#include "epsbench/stats.hpp"

namespace epsbench {

struct SimulatedSeries {
    std::vector<std::uint8_t> symbols;
    std::vector<std::int32_t> states;  // states[t] emitted symbols[t]; empty when not recorded
    std::uint64_t seed = 0;
    std::string machine_id;

    std::size_t size() const { return symbols.size(); }
};

struct SimulateOptions {
    bool record_states = true;
    std::string machine_id;
};

namespace detail {

// Inverse-CDF draw from a discrete distribution using one uniform.
inline std::int32_t draw_index(double u, const double* probs, std::int32_t n) {
    double acc = 0.0;
    std::int32_t last = 0;
    for (std::int32_t i = 0; i < n; ++i) {
        if (probs[i] <= 0.0) continue;
        acc += probs[i];
        last = i;
        if (u < acc) return i;
    }
    return last;
}

}  // namespace detail

// Step t consumes draw t+1 of the counter stream keyed by the seed; draw 0
// picks the initial state.
inline SimulatedSeries simulate(const EpsilonMachine& m, const StationaryDistribution& pi, std::size_t length,
                                std::uint64_t seed, const SimulateOptions& options = {}) {
    detail::require_matching(m, pi);
    SimulatedSeries out;
    out.seed = seed;
    out.machine_id = options.machine_id;
    if (length == 0) return out;
    const CounterRng rng(seed);
    out.symbols.resize(length);
    if (options.record_states) out.states.resize(length);
    const auto k = m.alphabet_size();
    const auto* emission = m.emission_table().data();
    const auto* next = m.next_table().data();
    auto state = detail::draw_index(CounterRng::to_unit(rng.at(0)), pi.pi.data(), m.n_states());
    for (std::size_t t = 0; t < length; ++t) {
        const double u = CounterRng::to_unit(rng.at(t + 1));
        const auto x = detail::draw_index(u, emission + static_cast<std::size_t>(state) * k, k);
        out.symbols[t] = static_cast<std::uint8_t>(x);
        if (options.record_states) out.states[t] = state;
        state = next[static_cast<std::size_t>(state) * k + x];
    }
    return out;
}

inline SimulatedSeries simulate(const EpsilonMachine& m, std::size_t length, std::uint64_t seed,
                                const SimulateOptions& options = {}) {
    return simulate(m, stationary_distribution(m), length, seed, options);
}

// True when every (state, symbol, next state) step agrees with the machine.
inline bool consistent_with(const EpsilonMachine& m, const SimulatedSeries& s) {
    if (s.states.size() != s.symbols.size()) return false;
    for (std::size_t t = 0; t < s.size(); ++t) {
        const auto st = s.states[t];
        const auto x = static_cast<std::int32_t>(s.symbols[t]);
        if (st < 0 || st >= m.n_states() || x >= m.alphabet_size()) return false;
        if (!(m.emission(st, x) > 0.0) || !m.has_transition(st, x)) return false;
        if (t + 1 < s.size() && m.next_state(st, x) != s.states[t + 1]) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Plug-in conditional entropy from (m+1)-gram counts

struct EntropyEstimate {
    double value = 0.0;           // nats
    double standard_error = 0.0;  // batch means over the per-position log-loss
};

inline EntropyEstimate empirical_conditional_entropy_with_error(std::span<const std::uint8_t> symbols, int m,
                                                                std::int32_t alphabet_size = 2,
                                                                std::size_t n_batches = 100) {
    if (m < 0) throw std::invalid_argument("context length must be >= 0");
    if (symbols.size() <= static_cast<std::size_t>(m)) throw InsufficientData("series shorter than the context");
    const auto k = static_cast<std::uint64_t>(alphabet_size);
    std::uint64_t contexts = 1;
    for (int i = 0; i < m; ++i) contexts *= k;
    const std::size_t n = symbols.size() - static_cast<std::size_t>(m);

    std::vector<std::uint64_t> context_of(n);
    std::vector<std::uint32_t> joint(contexts * k, 0), marginal(contexts, 0);
    std::uint64_t ctx = 0;
    for (int i = 0; i < m; ++i) ctx = ctx * k + symbols[i];
    for (std::size_t i = 0; i < n; ++i) {
        const auto x = symbols[static_cast<std::size_t>(m) + i];
        context_of[i] = ctx;
        ++joint[ctx * k + x];
        ++marginal[ctx];
        if (m > 0) ctx = (ctx * k + x) % contexts;
    }
    std::size_t observed = 0;
    for (auto c : marginal) observed += c > 0;
    if (static_cast<double>(n) < 10.0 * static_cast<double>(observed))
        throw InsufficientData("fewer than 10 counts per observed context on average");

    std::vector<double> loss(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = context_of[i];
        const auto x = symbols[static_cast<std::size_t>(m) + i];
        loss[i] = -std::log(static_cast<double>(joint[c * k + x]) / static_cast<double>(marginal[c]));
    }
    EntropyEstimate out;
    out.value = mean(loss);
    out.standard_error = n >= 2 * n_batches ? batch_means_standard_error(loss, n_batches) : 0.0;
    return out;
}

inline double empirical_conditional_entropy(std::span<const std::uint8_t> symbols, int m,
                                            std::int32_t alphabet_size = 2) {
    return empirical_conditional_entropy_with_error(symbols, m, alphabet_size).value;
}

inline double empirical_conditional_entropy(const SimulatedSeries& s, int m, std::int32_t alphabet_size = 2) {
    return empirical_conditional_entropy(s.symbols, m, alphabet_size);
}

// ---------------------------------------------------------------------------
// Series files: one ASCII digit per symbol, no newline, plus <path>.json
// holding machine id, seed and length.

inline void write_series(const std::string& path, const SimulatedSeries& s) {
    {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error("cannot open " + path + " for writing");
        std::string text(s.size(), '0');
        for (std::size_t i = 0; i < s.size(); ++i) text[i] = static_cast<char>('0' + s.symbols[i]);
        out << text;
    }
    nlohmann::ordered_json meta;
    meta["machine_id"] = s.machine_id;
    meta["seed"] = s.seed;
    meta["length"] = s.size();
    std::ofstream out(path + ".json");
    if (!out) throw Error("cannot open " + path + ".json for writing");
    out << meta.dump(2) << '\n';
}

inline SimulatedSeries read_series(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    SimulatedSeries s;
    s.symbols.resize(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] < '0' || text[i] > '9') throw ParseError(1, "series symbol at offset " + std::to_string(i) + " is not a digit");
        s.symbols[i] = static_cast<std::uint8_t>(text[i] - '0');
    }
    if (std::ifstream meta_in(path + ".json"); meta_in) {
        const auto meta = nlohmann::json::parse(meta_in);
        s.machine_id = meta.value("machine_id", std::string{});
        s.seed = meta.value("seed", std::uint64_t{0});
        if (meta.value("length", s.size()) != s.size()) throw ParseError(1, "series length disagrees with metadata");
    }
    return s;
}

}  // namespace epsbench
