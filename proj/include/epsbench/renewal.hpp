#pragma once

// Discrete-time renewal processes as count-state epsilon-machines.
//
// State n counts the symbols emitted since the last event. From state n the
// machine emits 1 (an event) with the hazard F(n)/w(n) and returns to state 0,
// otherwise emits 0 and moves to n+1. The chain is cut at n_max, where the
// event is forced so the presentation stays finite and irreducible.

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "epsbench/errors.hpp"
#include "epsbench/format.hpp"
#include "epsbench/infotheory.hpp"
#include "epsbench/machine.hpp"

namespace epsbench {

inline constexpr std::int32_t kDefaultRenewalNMax = 10000;

// w(n) = 1 for n = 0, n^-beta for n >= 1.
struct PowerLaw {
    double beta = 1.0;
};

// Two-state nonunifilar generator's renewal process, parametrized by (p, q).
struct FromPQ {
    double p = 0.5;
    double q = 0.5;
};

// w(0..n_max) given directly; w is taken to vanish past the table.
struct ExplicitSurvival {
    std::vector<double> w;
};

using SurvivalFamily = std::variant<PowerLaw, FromPQ, ExplicitSurvival>;

struct SurvivalSpec {
    SurvivalFamily family = PowerLaw{};
    std::int32_t n_max = kDefaultRenewalNMax;

    static SurvivalSpec power_law(double beta, std::int32_t n_max = kDefaultRenewalNMax) {
        return {PowerLaw{beta}, n_max};
    }
    static SurvivalSpec from_pq(double p, double q, std::int32_t n_max) { return {FromPQ{p, q}, n_max}; }
    static SurvivalSpec from_table(std::vector<double> w) {
        const auto n_max = static_cast<std::int32_t>(w.size()) - 1;
        return {ExplicitSurvival{std::move(w)}, n_max};
    }
    // w(n) = (1 - hazard)^n; every count has the same event probability.
    static SurvivalSpec constant_hazard(double hazard, std::int32_t n_max) {
        std::vector<double> w(static_cast<std::size_t>(n_max) + 1);
        for (std::int32_t n = 0; n <= n_max; ++n) w[n] = std::pow(1.0 - hazard, n);
        return from_table(std::move(w));
    }
};

// Survival w(n) of the untruncated family (0 past an explicit table).
inline double survival(const SurvivalSpec& spec, std::int64_t n) {
    if (n < 0) throw IndexOutOfRange("survival: n must be >= 0");
    return std::visit(
        [n](const auto& f) -> double {
            using F = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<F, PowerLaw>) {
                return n == 0 ? 1.0 : std::pow(static_cast<double>(n), -f.beta);
            } else if constexpr (std::is_same_v<F, FromPQ>) {
                const double nn = static_cast<double>(n);
                if (f.p == f.q) return n == 0 ? 1.0 : std::pow(f.p, nn - 1.0) * (nn * (1.0 - f.p) + f.p);
                return ((1.0 - f.q) * std::pow(f.p, nn) - (1.0 - f.p) * std::pow(f.q, nn)) / (f.p - f.q);
            } else {
                return n < static_cast<std::int64_t>(f.w.size()) ? f.w[n] : 0.0;
            }
        },
        spec.family);
}

inline void check(const SurvivalSpec& spec) {
    if (spec.n_max < 0) throw DegenerateSpec("n_max must be >= 0");
    std::visit(
        [&](const auto& f) {
            using F = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<F, PowerLaw>) {
                if (!(f.beta > 0.0)) throw DegenerateSpec("power-law beta must be > 0");
            } else if constexpr (std::is_same_v<F, FromPQ>) {
                if (!(f.p > 0.0 && f.p < 1.0 && f.q > 0.0 && f.q < 1.0))
                    throw DegenerateSpec("p and q must lie in (0, 1)");
            } else {
                if (f.w.empty() || f.w[0] != 1.0) throw DegenerateSpec("survival table must start with w(0) = 1");
                for (std::size_t i = 1; i < f.w.size(); ++i)
                    if (f.w[i] > f.w[i - 1]) throw DegenerateSpec("survival table must be nonincreasing");
            }
        },
        spec.family);
    for (std::int32_t n = 0; n <= spec.n_max; ++n)
        if (!(survival(spec, n) > 0.0))
            throw DegenerateSpec("survival must be positive up to n_max (w(" + std::to_string(n) + ") = " +
                                 format_number(survival(spec, n)) + ")");
}

// Interevent pmf F(n) of the untruncated family.
inline double interevent_pmf(const SurvivalSpec& spec, std::int32_t n) {
    if (n < 0 || n > spec.n_max) throw IndexOutOfRange("interevent_pmf: n outside [0, n_max]");
    if (const auto* pq = std::get_if<FromPQ>(&spec.family)) {
        const double p = pq->p, q = pq->q, nn = n;
        if (p == q) return (1.0 - p) * (1.0 - p) * nn * std::pow(p, nn - 1.0);
        return (1.0 - p) * (1.0 - q) * (std::pow(p, nn) - std::pow(q, nn)) / (p - q);
    }
    return survival(spec, n) - survival(spec, n + 1);
}

// Event probability at count n, before truncation.
inline double hazard(const SurvivalSpec& spec, std::int32_t n) {
    return interevent_pmf(spec, n) / survival(spec, n);
}

inline EpsilonMachine build_renewal_machine(const SurvivalSpec& spec) {
    check(spec);
    const auto n_states = spec.n_max + 1;
    std::vector<Transition> ts;
    ts.reserve(static_cast<std::size_t>(n_states) * 2);
    for (std::int32_t n = 0; n < n_states; ++n) {
        double event = 1.0;
        if (n < spec.n_max) {
            event = hazard(spec, n);
            // Survival differences can round a hair outside [0, 1].
            if (event < 0.0 && event > -1e-15) event = 0.0;
            if (event > 1.0 && event < 1.0 + 1e-15) event = 1.0;
            if (!(event >= 0.0 && event <= 1.0))
                throw DegenerateSpec("hazard F(n)/w(n) at n = " + std::to_string(n) + " is " + format_number(event));
        }
        if (event < 1.0) ts.push_back({n, 0, 1.0 - event, n + 1});
        if (event > 0.0) ts.push_back({n, 1, event, 0});
    }
    return EpsilonMachine::from_transitions(n_states, 2, ts);
}

// ---------------------------------------------------------------------------
// Fano curves for renewal processes

// Percentages are measured against the infinite-memory Fano bound
// Hb^-1(h_mu), the same reference as the log-m curve. pe_min keeps the
// optimal predictor's error for reporting.
struct RenewalCurve {
    SurvivalSpec spec;
    double pe_min = 0.0;
    double pe_reference = 0.0;
    MyopicCurve myopic;
    std::vector<FanoCurveRow> rows;
};

inline RenewalCurve renewal_fano_curve(const SurvivalSpec& spec, int m_max) {
    const auto machine = build_renewal_machine(spec);
    const auto pi = stationary_distribution(machine);
    RenewalCurve out;
    out.spec = spec;
    out.pe_min = min_error_probability(machine, pi);
    out.myopic = myopic_entropy_rate(machine, pi, m_max);
    out.pe_reference = inverse_binary_entropy(std::min(out.myopic.h_mu, std::log(2.0)));
    out.rows = fano_curve(out.myopic, out.pe_reference);
    return out;
}

// Family parameter columns for CSV output.
inline std::string renewal_parameter_header(const SurvivalSpec& spec) {
    if (std::holds_alternative<FromPQ>(spec.family)) return "p,q,n_max";
    if (std::holds_alternative<PowerLaw>(spec.family)) return "beta,n_max";
    return "n_max";
}

inline std::string renewal_parameter_cells(const SurvivalSpec& spec) {
    if (const auto* pq = std::get_if<FromPQ>(&spec.family))
        return format_number(pq->p) + ',' + format_number(pq->q) + ',' + std::to_string(spec.n_max);
    if (const auto* pl = std::get_if<PowerLaw>(&spec.family))
        return format_number(pl->beta) + ',' + std::to_string(spec.n_max);
    return std::to_string(spec.n_max);
}

inline std::string renewal_curve_csv(const RenewalCurve& curve) {
    std::ostringstream os;
    os << kCurveCsvHeader << ',' << renewal_parameter_header(curve.spec) << '\n';
    for (const auto& r : curve.rows) os << curve_csv_row(r) << ',' << renewal_parameter_cells(curve.spec) << '\n';
    return os.str();
}

}  // namespace epsbench
