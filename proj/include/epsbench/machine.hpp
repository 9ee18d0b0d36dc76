#pragma once

// Finite unifilar hidden Markov chains (epsilon-machine presentations) and
// their exact stationary analysis.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "epsbench/errors.hpp"
#include "epsbench/format.hpp"
#include "epsbench/graph.hpp"

namespace epsbench {

inline constexpr double kProbabilityTolerance = 1e-12;
inline constexpr std::int32_t kNoTransition = -1;

struct Transition {
    std::int32_t state = 0;
    std::int32_t symbol = 0;
    double probability = 0.0;
    std::int32_t next_state = 0;

    friend bool operator==(const Transition&, const Transition&) = default;
};

class EpsilonMachine {
public:
    EpsilonMachine() = default;

    // Raw tables, row-major over (state, symbol). Sizes are checked here; the
    // probabilistic and graph invariants are checked by validate().
    EpsilonMachine(std::int32_t n_states, std::int32_t alphabet_size, std::vector<double> emission,
                   std::vector<std::int32_t> next_state)
        : n_states_(n_states),
          alphabet_size_(alphabet_size),
          emission_(std::move(emission)),
          next_(std::move(next_state)) {
        if (n_states_ < 1 || alphabet_size_ < 1)
            throw std::invalid_argument("machine needs at least one state and one symbol");
        const auto cells = static_cast<std::size_t>(n_states_) * alphabet_size_;
        if (emission_.size() != cells || next_.size() != cells)
            throw std::invalid_argument("emission/next_state tables must have n_states*alphabet_size entries");
    }

    // Unlisted (state, symbol) pairs get probability 0 and no transition.
    static EpsilonMachine from_transitions(std::int32_t n_states, std::int32_t alphabet_size,
                                           const std::vector<Transition>& transitions) {
        if (n_states < 1 || alphabet_size < 1)
            throw std::invalid_argument("machine needs at least one state and one symbol");
        const auto cells = static_cast<std::size_t>(n_states) * alphabet_size;
        std::vector<double> emission(cells, 0.0);
        std::vector<std::int32_t> next(cells, kNoTransition);
        std::vector<bool> seen(cells, false);
        for (const auto& t : transitions) {
            if (t.state < 0 || t.state >= n_states || t.symbol < 0 || t.symbol >= alphabet_size)
                throw std::invalid_argument("transition (state, symbol) out of range");
            const auto cell = static_cast<std::size_t>(t.state) * alphabet_size + t.symbol;
            if (seen[cell])
                throw std::invalid_argument("duplicate transition for state " + std::to_string(t.state) +
                                            " symbol " + std::to_string(t.symbol) +
                                            " (machine would not be unifilar)");
            seen[cell] = true;
            emission[cell] = t.probability;
            next[cell] = t.next_state;
        }
        return EpsilonMachine(n_states, alphabet_size, std::move(emission), std::move(next));
    }

    std::int32_t n_states() const noexcept { return n_states_; }
    std::int32_t alphabet_size() const noexcept { return alphabet_size_; }

    double emission(std::int32_t state, std::int32_t symbol) const {
        return emission_[cell(state, symbol)];
    }
    std::int32_t next_state(std::int32_t state, std::int32_t symbol) const {
        return next_[cell(state, symbol)];
    }
    bool has_transition(std::int32_t state, std::int32_t symbol) const {
        return next_[cell(state, symbol)] != kNoTransition;
    }

    const std::vector<double>& emission_table() const noexcept { return emission_; }
    const std::vector<std::int32_t>& next_table() const noexcept { return next_; }

    std::vector<Transition> transitions() const {
        std::vector<Transition> out;
        for (std::int32_t s = 0; s < n_states_; ++s)
            for (std::int32_t x = 0; x < alphabet_size_; ++x)
                if (has_transition(s, x)) out.push_back({s, x, emission(s, x), next_state(s, x)});
        return out;
    }

    // Edges actually used by the process (positive probability, valid target).
    Digraph support_graph() const {
        Digraph g(n_states_);
        for (std::int32_t s = 0; s < n_states_; ++s)
            for (std::int32_t x = 0; x < alphabet_size_; ++x) {
                const auto t = next_state(s, x);
                if (t >= 0 && t < n_states_ && emission(s, x) > 0.0) g[s].push_back(t);
            }
        return g;
    }

    friend bool operator==(const EpsilonMachine&, const EpsilonMachine&) = default;

private:
    std::size_t cell(std::int32_t state, std::int32_t symbol) const {
        return static_cast<std::size_t>(state) * alphabet_size_ + symbol;
    }

    std::int32_t n_states_ = 0;
    std::int32_t alphabet_size_ = 0;
    std::vector<double> emission_;
    std::vector<std::int32_t> next_;
};

// Relabel states: new index of old state s is permutation[s].
inline EpsilonMachine permute_states(const EpsilonMachine& m, const std::vector<std::int32_t>& permutation) {
    if (permutation.size() != static_cast<std::size_t>(m.n_states()))
        throw std::invalid_argument("permutation size must equal n_states");
    std::vector<Transition> ts;
    for (auto t : m.transitions()) {
        t.state = permutation[t.state];
        if (t.next_state >= 0 && t.next_state < m.n_states()) t.next_state = permutation[t.next_state];
        ts.push_back(t);
    }
    return EpsilonMachine::from_transitions(m.n_states(), m.alphabet_size(), ts);
}

// ---------------------------------------------------------------------------
// Validation

struct ValidationCheck {
    std::string name;
    bool passed = true;
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;

    bool ok() const {
        return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
    }
    bool passed(std::string_view name) const {
        for (const auto& c : checks)
            if (c.name == name) return c.passed;
        return false;
    }
    std::string summary() const {
        std::ostringstream os;
        for (const auto& c : checks)
            os << (c.passed ? "ok   " : "FAIL ") << c.name << (c.detail.empty() ? "" : ": " + c.detail) << '\n';
        return os.str();
    }
};

inline bool is_irreducible(const EpsilonMachine& m) {
    const auto scc = strongly_connected_components(m.support_graph());
    return scc.count() == 1;
}

inline ValidationReport validate(const EpsilonMachine& m) {
    ValidationReport report;
    const auto n = m.n_states();
    const auto k = m.alphabet_size();

    ValidationCheck range{"probability_range", true, {}};
    ValidationCheck norm{"normalization", true, {}};
    for (std::int32_t s = 0; s < n && (range.passed || norm.passed); ++s) {
        double total = 0.0;
        for (std::int32_t x = 0; x < k; ++x) {
            const double p = m.emission(s, x);
            if (!(p >= 0.0 && p <= 1.0) && range.passed) {
                range.passed = false;
                range.detail = "p(" + std::to_string(x) + "|" + std::to_string(s) + ") = " + std::to_string(p);
            }
            total += p;
        }
        if (!(std::abs(total - 1.0) <= kProbabilityTolerance) && norm.passed) {
            norm.passed = false;
            char buf[96];
            std::snprintf(buf, sizeof buf, "state %d sums to %.17g", s, total);
            norm.detail = buf;
        }
    }

    ValidationCheck unifilar{"unifilar", true, {}};
    ValidationCheck support{"transition_support", true, {}};
    for (std::int32_t s = 0; s < n; ++s)
        for (std::int32_t x = 0; x < k; ++x) {
            const auto t = m.next_state(s, x);
            if (t != kNoTransition && (t < 0 || t >= n) && unifilar.passed) {
                unifilar.passed = false;
                unifilar.detail = "state " + std::to_string(s) + " symbol " + std::to_string(x) +
                                  " points to nonexistent state " + std::to_string(t);
            }
            const bool positive = m.emission(s, x) > 0.0;
            if (positive != m.has_transition(s, x) && support.passed) {
                support.passed = false;
                support.detail = "state " + std::to_string(s) + " symbol " + std::to_string(x) +
                                 (positive ? " has probability but no destination"
                                           : " has a destination but zero probability");
            }
        }

    ValidationCheck irreducible{"irreducible", true, {}};
    const auto scc = strongly_connected_components(m.support_graph());
    if (scc.count() != 1) {
        irreducible.passed = false;
        std::size_t closed = 0;
        for (bool c : scc.is_closed) closed += c;
        irreducible.detail = std::to_string(scc.count()) + " strongly connected components, " +
                             std::to_string(closed) + " recurrent";
    }

    report.checks = {range, norm, unifilar, support, irreducible};
    return report;
}

// ---------------------------------------------------------------------------
// Stationary analysis

struct StationaryDistribution {
    std::vector<double> pi;

    std::size_t size() const { return pi.size(); }
    double operator[](std::size_t i) const { return pi[i]; }
};

inline constexpr std::int32_t kDenseSolverLimit = 512;
inline constexpr double kPowerIterationTolerance = 1e-13;
inline constexpr long kPowerIterationMaxSteps = 1'000'000;

// pi T, where T(s -> t) = sum over symbols x with next(s,x)=t of p(x|s).
inline std::vector<double> propagate(const EpsilonMachine& m, const std::vector<double>& pi) {
    std::vector<double> out(pi.size(), 0.0);
    for (std::int32_t s = 0; s < m.n_states(); ++s) {
        if (pi[s] == 0.0) continue;
        for (std::int32_t x = 0; x < m.alphabet_size(); ++x)
            if (m.has_transition(s, x)) out[m.next_state(s, x)] += pi[s] * m.emission(s, x);
    }
    return out;
}

inline double stationary_residual(const EpsilonMachine& m, const StationaryDistribution& dist) {
    const auto next = propagate(m, dist.pi);
    double r = 0.0;
    for (std::size_t i = 0; i < next.size(); ++i) r = std::max(r, std::abs(next[i] - dist.pi[i]));
    return r;
}

namespace detail {

inline void normalize_nonnegative(std::vector<double>& v) {
    double total = 0.0;
    for (double& x : v) {
        if (x < 0.0) x = 0.0;
        total += x;
    }
    for (double& x : v) x /= total;
}

inline std::vector<double> stationary_dense(const EpsilonMachine& m) {
    const auto n = m.n_states();
    // (T^T - I) pi = 0 with the last equation replaced by sum(pi) = 1.
    Eigen::MatrixXd a = -Eigen::MatrixXd::Identity(n, n);
    for (std::int32_t s = 0; s < n; ++s)
        for (std::int32_t x = 0; x < m.alphabet_size(); ++x)
            if (m.has_transition(s, x)) a(m.next_state(s, x), s) += m.emission(s, x);
    a.row(n - 1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs(n - 1) = 1.0;
    Eigen::VectorXd sol = a.fullPivLu().solve(rhs);
    std::vector<double> pi(sol.data(), sol.data() + n);
    normalize_nonnegative(pi);
    return pi;
}

// Lazy chain (I + T)/2 shares the fixed point of T and is aperiodic, so the
// iteration converges for periodic machines too.
inline std::vector<double> stationary_power(const EpsilonMachine& m) {
    const auto n = m.n_states();
    std::vector<double> pi(n, 1.0 / n);
    for (long step = 0; step < kPowerIterationMaxSteps; ++step) {
        auto next = propagate(m, pi);
        double residual = 0.0;
        for (std::int32_t i = 0; i < n; ++i) {
            residual = std::max(residual, std::abs(next[i] - pi[i]));
            pi[i] = 0.5 * (pi[i] + next[i]);
        }
        if (residual < kPowerIterationTolerance) break;
    }
    normalize_nonnegative(pi);
    return pi;
}

}  // namespace detail

inline StationaryDistribution stationary_distribution(const EpsilonMachine& m) {
    if (!is_irreducible(m))
        throw NotIrreducible("machine has transient states or more than one recurrent class");
    if (m.n_states() <= kDenseSolverLimit) return {detail::stationary_dense(m)};
    return {detail::stationary_power(m)};
}

namespace detail {
inline void require_matching(const EpsilonMachine& m, const StationaryDistribution& pi) {
    if (pi.size() != static_cast<std::size_t>(m.n_states()))
        throw std::invalid_argument("stationary distribution does not match machine");
}
}  // namespace detail

// Entropy rate in nats per symbol.
inline double entropy_rate(const EpsilonMachine& m, const StationaryDistribution& pi) {
    detail::require_matching(m, pi);
    double h = 0.0;
    for (std::int32_t s = 0; s < m.n_states(); ++s) {
        double hs = 0.0;
        for (std::int32_t x = 0; x < m.alphabet_size(); ++x) {
            const double p = m.emission(s, x);
            if (p > 0.0) hs -= p * std::log(p);
        }
        h += pi[s] * hs;
    }
    return h;
}

// Error probability of the synchronized predictor that always guesses the
// most likely next symbol.
inline double min_error_probability(const EpsilonMachine& m, const StationaryDistribution& pi) {
    detail::require_matching(m, pi);
    double pe = 0.0;
    for (std::int32_t s = 0; s < m.n_states(); ++s) {
        double best = 0.0;
        for (std::int32_t x = 0; x < m.alphabet_size(); ++x) best = std::max(best, m.emission(s, x));
        pe += (1.0 - best) * pi[s];
    }
    return pe;
}

// ---------------------------------------------------------------------------
// Text format
//
//   # comments and blank lines are ignored
//   epsilon_machine 1
//   n_states 2
//   alphabet_size 2
//   transitions
//   <state> <symbol> <probability> <next_state>
//   ...
//
// One record per (state, symbol) with a defined transition. Probabilities are
// written in scientific notation with 17 significant digits, which round-trips
// every double exactly.

inline std::string serialize(const EpsilonMachine& m) {
    std::ostringstream os;
    os << "epsilon_machine 1\n";
    os << "n_states " << m.n_states() << '\n';
    os << "alphabet_size " << m.alphabet_size() << '\n';
    os << "transitions\n";
    for (const auto& t : m.transitions())
        os << t.state << ' ' << t.symbol << ' ' << format_exact(t.probability) << ' ' << t.next_state << '\n';
    return os.str();
}

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        const auto start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

template <class T>
T parse_number(std::string_view token, std::size_t line, std::string_view field) {
    T value{};
    const auto* end = token.data() + token.size();
    const auto [ptr, ec] = std::from_chars(token.data(), end, value);
    if (ec != std::errc{} || ptr != end)
        throw ParseError(line, "bad " + std::string(field) + " '" + std::string(token) + "'");
    return value;
}

}  // namespace detail

inline EpsilonMachine deserialize(std::string_view text) {
    std::int32_t n_states = -1;
    std::int32_t alphabet_size = -1;
    bool header_seen = false;
    bool in_records = false;
    std::vector<Transition> records;
    std::vector<std::size_t> record_lines;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        auto line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        const auto tok = detail::split_ws(line);
        if (tok.empty()) continue;

        if (!header_seen) {
            if (tok[0] != "epsilon_machine" || tok.size() != 2 || tok[1] != "1")
                throw ParseError(line_no, "expected header 'epsilon_machine 1'");
            header_seen = true;
            continue;
        }
        if (!in_records) {
            if (tok[0] == "n_states" && tok.size() == 2) {
                n_states = detail::parse_number<std::int32_t>(tok[1], line_no, "n_states");
            } else if (tok[0] == "alphabet_size" && tok.size() == 2) {
                alphabet_size = detail::parse_number<std::int32_t>(tok[1], line_no, "alphabet_size");
            } else if (tok[0] == "transitions" && tok.size() == 1) {
                if (n_states < 1) throw ParseError(line_no, "n_states missing or not positive");
                if (alphabet_size < 1) throw ParseError(line_no, "alphabet_size missing or not positive");
                in_records = true;
            } else {
                throw ParseError(line_no, "unknown field '" + std::string(tok[0]) + "'");
            }
            continue;
        }
        if (tok.size() != 4)
            throw ParseError(line_no, "transition record needs 4 fields: state symbol probability next_state");
        Transition t;
        t.state = detail::parse_number<std::int32_t>(tok[0], line_no, "state");
        t.symbol = detail::parse_number<std::int32_t>(tok[1], line_no, "symbol");
        t.probability = detail::parse_number<double>(tok[2], line_no, "probability");
        t.next_state = detail::parse_number<std::int32_t>(tok[3], line_no, "next_state");
        if (t.state < 0 || t.state >= n_states) throw ParseError(line_no, "state out of range");
        if (t.symbol < 0 || t.symbol >= alphabet_size) throw ParseError(line_no, "symbol out of range");
        if (t.next_state < 0 || t.next_state >= n_states) throw ParseError(line_no, "next_state out of range");
        records.push_back(t);
        record_lines.push_back(line_no);
    }
    if (!header_seen) throw ParseError(line_no, "empty document");
    if (!in_records) throw ParseError(line_no, "missing 'transitions' section");

    std::vector<bool> has_row(n_states, false);
    std::vector<bool> seen(static_cast<std::size_t>(n_states) * alphabet_size, false);
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& t = records[i];
        const auto cell = static_cast<std::size_t>(t.state) * alphabet_size + t.symbol;
        if (seen[cell]) throw ParseError(record_lines[i], "duplicate record for (state, symbol)");
        seen[cell] = true;
        has_row[t.state] = true;
    }
    for (std::int32_t s = 0; s < n_states; ++s)
        if (!has_row[s]) throw ParseError(line_no, "no emission records for state " + std::to_string(s));
    return EpsilonMachine::from_transitions(n_states, alphabet_size, records);
}

// ---------------------------------------------------------------------------
// Reference machines

inline EpsilonMachine fair_coin_machine() {
    return EpsilonMachine::from_transitions(1, 2, {{0, 0, 0.5, 0}, {0, 1, 0.5, 0}});
}

inline EpsilonMachine biased_coin_machine(double p_one) {
    std::vector<Transition> ts;
    if (p_one < 1.0) ts.push_back({0, 0, 1.0 - p_one, 0});
    if (p_one > 0.0) ts.push_back({0, 1, p_one, 0});
    return EpsilonMachine::from_transitions(1, 2, ts);
}

// A emits 0 (stay) or 1 (go to B) with equal probability; B always emits 0.
inline EpsilonMachine golden_mean_machine() {
    return EpsilonMachine::from_transitions(2, 2, {{0, 0, 0.5, 0}, {0, 1, 0.5, 1}, {1, 0, 1.0, 0}});
}

// A emits 1 -> B, B emits 0 -> A.
inline EpsilonMachine period2_machine() {
    return EpsilonMachine::from_transitions(2, 2, {{0, 1, 1.0, 1}, {1, 0, 1.0, 0}});
}

}  // namespace epsbench
