#pragma once

// Word probabilities, block entropies, myopic entropy rates, predictive
// information and the binary Fano bound. All entropies are in nats.

#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "epsbench/errors.hpp"
#include "epsbench/format.hpp"
#include "epsbench/machine.hpp"

namespace epsbench {

inline constexpr int kEnumerationCap = 20;
inline constexpr int kGeneralAlphabetCap = 10;
inline constexpr double kWordPruneThreshold = 1e-300;

// ---------------------------------------------------------------------------
// Binary entropy and its inverse on [0, 1/2]

inline double binary_entropy(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("binary_entropy: p must lie in [0, 1]");
    double h = 0.0;
    if (p > 0.0) h -= p * std::log(p);
    if (p < 1.0) h -= (1.0 - p) * std::log1p(-p);
    return h;
}

inline constexpr int kInverseEntropyIterations = 200;

// Bisection: the slope of Hb diverges at 0, which rules out Newton there.
inline double inverse_binary_entropy(double h) {
    const double ln2 = std::log(2.0);
    if (!(h >= 0.0) || h > ln2 + 1e-12) throw DomainError("inverse_binary_entropy: h must lie in [0, ln 2]");
    if (h == 0.0) return 0.0;
    if (h >= ln2) return 0.5;
    double lo = 0.0;
    double hi = 0.5;
    for (int i = 0; i < kInverseEntropyIterations; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (binary_entropy(mid) < h)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

struct FanoBound {
    double conditional_entropy = 0.0;
    double pe_lower_bound = 0.0;
    double pct_increase_over_pe_min = 0.0;
};

// Percentage by which the Fano lower bound exceeds pe_min, floored at zero.
// pe_min == 0 with a positive bound yields +inf.
inline FanoBound fano_report(double conditional_entropy, double pe_min) {
    if (!(pe_min >= 0.0 && pe_min <= 1.0)) throw DomainError("fano_report: pe_min must lie in [0, 1]");
    FanoBound f;
    f.conditional_entropy = conditional_entropy;
    f.pe_lower_bound = inverse_binary_entropy(conditional_entropy);
    if (pe_min > 0.0)
        f.pct_increase_over_pe_min = std::max(0.0, (f.pe_lower_bound - pe_min) / pe_min * 100.0);
    else
        f.pct_increase_over_pe_min = f.pe_lower_bound > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    return f;
}

// ---------------------------------------------------------------------------
// Exact word enumeration
//
// Depth-first over words, carrying the joint vector p(w, state) as a sparse
// list of active states per depth. Unifilarity means each active state has a
// single successor per symbol, so extending a word costs O(|support|).

namespace detail {

inline void check_enumerable(const EpsilonMachine& m, int length, int cap) {
    if (length < 0) throw std::invalid_argument("word length must be >= 0");
    if (length > cap) throw CapExceeded("word length " + std::to_string(length) + " exceeds cap " + std::to_string(cap));
    if (m.alphabet_size() > 2 && length > kGeneralAlphabetCap)
        throw UnsupportedAlphabet("exact enumeration beyond length 10 requires a binary alphabet");
}

template <class Visitor>
class WordEnumerator {
public:
    WordEnumerator(const EpsilonMachine& m, const StationaryDistribution& pi, int length, Visitor& visit)
        : m_(m), length_(length), visit_(visit), mass_(length + 1), support_(length + 1) {
        for (auto& v : mass_) v.assign(m.n_states(), 0.0);
        child_prob_.assign(static_cast<std::size_t>(std::max(length, 1)) * m.alphabet_size(), 0.0);
        for (std::int32_t s = 0; s < m.n_states(); ++s)
            if (pi[s] > 0.0) {
                mass_[0][s] = pi[s];
                support_[0].push_back(s);
            }
    }

    void run() {
        visit_(0, std::uint64_t{0}, 1.0, nullptr);
        if (length_ > 0) descend(0, 0, 1.0);
    }

private:
    void descend(int depth, std::uint64_t word, double word_prob) {
        const auto k = m_.alphabet_size();
        double* children = &child_prob_[static_cast<std::size_t>(depth) * k];
        auto& next_mass = mass_[depth + 1];
        auto& next_support = support_[depth + 1];
        // First pass: probabilities of all one-symbol extensions.
        for (std::int32_t x = 0; x < k; ++x) {
            double total = 0.0;
            for (auto s : support_[depth]) total += mass_[depth][s] * m_.emission(s, x);
            children[x] = total;
        }
        visit_(depth, word, word_prob, children);
        for (std::int32_t x = 0; x < k; ++x) {
            const std::uint64_t child = word * static_cast<std::uint64_t>(k) + static_cast<std::uint64_t>(x);
            const double p = children[x];
            visit_(depth + 1, child, p, nullptr);
            if (depth + 1 >= length_ || p < kWordPruneThreshold) continue;
            for (auto s : support_[depth]) {
                const double e = m_.emission(s, x);
                if (e <= 0.0) continue;
                const double contribution = mass_[depth][s] * e;
                if (contribution == 0.0) continue;
                const auto t = m_.next_state(s, x);
                if (next_mass[t] == 0.0) next_support.push_back(t);
                next_mass[t] += contribution;
            }
            descend(depth + 1, child, p);
            for (auto t : next_support) next_mass[t] = 0.0;
            next_support.clear();
        }
    }

    const EpsilonMachine& m_;
    int length_;
    Visitor& visit_;
    std::vector<std::vector<double>> mass_;
    std::vector<std::vector<std::int32_t>> support_;
    std::vector<double> child_prob_;
};

template <class Visitor>
void enumerate_words(const EpsilonMachine& m, const StationaryDistribution& pi, int length, Visitor& visit) {
    WordEnumerator<Visitor> e(m, pi, length, visit);
    e.run();
}

}  // namespace detail

struct WordDistribution {
    std::int32_t alphabet_size = 2;
    int length = 0;
    // Index of a word: its symbols read as base-alphabet_size digits, first
    // symbol most significant.
    std::vector<double> probability;

    double operator()(const std::vector<int>& word) const {
        std::uint64_t idx = 0;
        for (int x : word) idx = idx * static_cast<std::uint64_t>(alphabet_size) + static_cast<std::uint64_t>(x);
        return probability.at(idx);
    }
};

inline WordDistribution word_distribution(const EpsilonMachine& m, const StationaryDistribution& pi, int length,
                                          int cap = kEnumerationCap) {
    detail::check_enumerable(m, length, cap);
    detail::require_matching(m, pi);
    WordDistribution out;
    out.alphabet_size = m.alphabet_size();
    out.length = length;
    std::uint64_t count = 1;
    for (int i = 0; i < length; ++i) count *= static_cast<std::uint64_t>(m.alphabet_size());
    out.probability.assign(count, 0.0);
    auto visit = [&](int depth, std::uint64_t word, double p, const double* children) {
        if (children == nullptr && depth == length) out.probability[word] = p;
    };
    detail::enumerate_words(m, pi, length, visit);
    return out;
}

inline WordDistribution word_distribution(const EpsilonMachine& m, int length, int cap = kEnumerationCap) {
    detail::check_enumerable(m, length, cap);
    return word_distribution(m, stationary_distribution(m), length, cap);
}

// Everything one enumeration pass yields, for lengths 0..max_length.
struct BlockStatistics {
    std::vector<double> block_entropy;        // H(L), L = 0..max_length
    std::vector<double> conditional_entropy;  // H[X_0 | previous m symbols], m = 0..max_length-1
    std::vector<double> window_error;         // Bayes error of the best m-window guess, m = 0..max_length-1
};

inline BlockStatistics block_statistics(const EpsilonMachine& m, const StationaryDistribution& pi, int max_length,
                                        int cap = kEnumerationCap) {
    detail::check_enumerable(m, max_length, cap);
    detail::require_matching(m, pi);
    BlockStatistics out;
    out.block_entropy.assign(max_length + 1, 0.0);
    out.conditional_entropy.assign(std::max(max_length, 0), 0.0);
    out.window_error.assign(std::max(max_length, 0), 0.0);
    const auto k = m.alphabet_size();
    auto visit = [&](int depth, std::uint64_t, double p, const double* children) {
        if (children == nullptr) {
            if (p >= kWordPruneThreshold) out.block_entropy[depth] -= p * std::log(p);
            return;
        }
        if (p < kWordPruneThreshold) return;
        double best = 0.0;
        for (std::int32_t x = 0; x < k; ++x) {
            const double c = children[x];
            best = std::max(best, c);
            if (c >= kWordPruneThreshold) out.conditional_entropy[depth] -= c * std::log(c / p);
        }
        out.window_error[depth] += p - best;
    };
    detail::enumerate_words(m, pi, max_length, visit);
    out.block_entropy[0] = 0.0;
    return out;
}

inline double block_entropy(const EpsilonMachine& m, const StationaryDistribution& pi, int length,
                            int cap = kEnumerationCap) {
    return block_statistics(m, pi, length, cap).block_entropy[length];
}

inline double block_entropy(const EpsilonMachine& m, int length, int cap = kEnumerationCap) {
    detail::check_enumerable(m, length, cap);
    return block_entropy(m, stationary_distribution(m), length, cap);
}

// ---------------------------------------------------------------------------
// Myopic entropy rate and predictive information

struct MyopicCurve {
    int m_max = 0;
    std::vector<double> h_of_m;  // h_of_m[m] = H[X_0 | X_{-m:0}], m = 0..m_max
    double h_mu = 0.0;

    double operator[](int m) const { return h_of_m.at(static_cast<std::size_t>(m)); }
};

inline MyopicCurve myopic_entropy_rate(const EpsilonMachine& m, const StationaryDistribution& pi, int m_max,
                                       int cap = kEnumerationCap) {
    if (m_max < 0) throw std::invalid_argument("m_max must be >= 0");
    if (m_max > cap - 1) throw CapExceeded("m_max " + std::to_string(m_max) + " exceeds cap - 1");
    const auto stats = block_statistics(m, pi, m_max + 1, cap);
    MyopicCurve curve;
    curve.m_max = m_max;
    curve.h_of_m = stats.conditional_entropy;
    curve.h_mu = entropy_rate(m, pi);
    return curve;
}

inline MyopicCurve myopic_entropy_rate(const EpsilonMachine& m, int m_max, int cap = kEnumerationCap) {
    return myopic_entropy_rate(m, stationary_distribution(m), m_max, cap);
}

// I_pred(m) = sum_{l=0}^{m} [h(l) - h_mu].
inline double predictive_information(const MyopicCurve& curve, int m) {
    if (m < 0 || m > curve.m_max) throw IndexOutOfRange("predictive_information: m outside the curve");
    double total = 0.0;
    for (int l = 0; l <= m; ++l) total += curve.h_of_m[l] - curve.h_mu;
    return total;
}

// Closed-form curve for a process whose predictive information grows like
// log m: h(m + 1) = h_mu + 1/m, capped at ln 2 (so h(0) = h(1) = ln 2).
inline MyopicCurve log_m_process_curve(double h_mu = 0.5, int m_max = 10000) {
    const double ln2 = std::log(2.0);
    if (!(h_mu >= 0.0 && h_mu <= ln2)) throw DomainError("log-m process: h_mu must lie in [0, ln 2]");
    if (m_max < 0) throw std::invalid_argument("m_max must be >= 0");
    MyopicCurve curve;
    curve.m_max = m_max;
    curve.h_mu = h_mu;
    curve.h_of_m.resize(static_cast<std::size_t>(m_max) + 1);
    for (int m = 0; m <= m_max; ++m)
        curve.h_of_m[m] = m < 2 ? ln2 : std::min(ln2, h_mu + 1.0 / static_cast<double>(m - 1));
    return curve;
}

// ---------------------------------------------------------------------------
// Fano curves

struct FanoCurveRow {
    int m = 0;
    double h_of_m = 0.0;
    double h_mu = 0.0;
    double pe_lower_bound = 0.0;
    double pe_min = 0.0;
    double pct_increase = 0.0;
};

inline std::vector<FanoCurveRow> fano_curve(const MyopicCurve& curve, double pe_min) {
    std::vector<FanoCurveRow> rows;
    rows.reserve(curve.h_of_m.size());
    for (int m = 0; m <= curve.m_max; ++m) {
        // Rounding can push a conditional entropy a hair outside [0, ln 2].
        const double h = std::clamp(curve.h_of_m[m], 0.0, std::log(2.0));
        const auto f = fano_report(h, pe_min);
        rows.push_back({m, curve.h_of_m[m], curve.h_mu, f.pe_lower_bound, pe_min, f.pct_increase_over_pe_min});
    }
    return rows;
}

inline constexpr const char* kCurveCsvHeader = "m,h_of_m_nats,h_mu_nats,pe_lower_bound,pe_min,pct_increase";

inline std::string curve_csv_row(const FanoCurveRow& r) {
    return std::to_string(r.m) + ',' + format_number(r.h_of_m) + ',' + format_number(r.h_mu) + ',' +
           format_number(r.pe_lower_bound) + ',' + format_number(r.pe_min) + ',' + format_number(r.pct_increase);
}

inline std::string curve_csv(const std::vector<FanoCurveRow>& rows) {
    std::ostringstream os;
    os << kCurveCsvHeader << '\n';
    for (const auto& r : rows) os << curve_csv_row(r) << '\n';
    return os.str();
}

}  // namespace epsbench
