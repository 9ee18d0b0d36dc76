#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "epsbench/infotheory.hpp"
#include "epsbench/sampler.hpp"
#include "oracles.hpp"

using namespace epsbench;

namespace {
const double kLn2 = std::log(2.0);

EpsilonMachine sampled(std::int32_t candidates, std::uint64_t seed) {
    return sample_epsilon_machine({candidates, 1.0, 2, seed}).machine;
}
}  // namespace

// --- binary entropy ------------------------------------------------------------

TEST(BinaryEntropy, Examples) {
    EXPECT_DOUBLE_EQ(binary_entropy(0.5), kLn2);
    EXPECT_EQ(binary_entropy(0.0), 0.0);
    EXPECT_EQ(binary_entropy(1.0), 0.0);
    EXPECT_NEAR(binary_entropy(0.1), 0.3251, 5e-5);
    EXPECT_NEAR(binary_entropy(0.1), oracle::binary_entropy(0.1), 1e-15);
}

TEST(BinaryEntropy, DomainErrors) {
    EXPECT_THROW(binary_entropy(-1e-9), DomainError);
    EXPECT_THROW(binary_entropy(1.0 + 1e-9), DomainError);
    EXPECT_THROW(binary_entropy(std::nan("")), DomainError);
}

TEST(InverseBinaryEntropy, Examples) {
    EXPECT_EQ(inverse_binary_entropy(0.0), 0.0);
    EXPECT_EQ(inverse_binary_entropy(kLn2), 0.5);
    EXPECT_EQ(inverse_binary_entropy(kLn2 + 5e-13), 0.5);
    EXPECT_NEAR(inverse_binary_entropy(binary_entropy(0.1)), 0.1, 1e-12);
    EXPECT_NEAR(inverse_binary_entropy(0.3251), 0.1, 1e-4);
    EXPECT_THROW(inverse_binary_entropy(-1e-15), DomainError);
    EXPECT_THROW(inverse_binary_entropy(kLn2 + 1e-11), DomainError);
}

TEST(InverseBinaryEntropy, RoundTripOnGrid) {
    const int n = 10000;
    double worst = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double h = kLn2 * i / n;
        const double p = inverse_binary_entropy(h);
        ASSERT_GE(p, 0.0);
        ASSERT_LE(p, 0.5);
        worst = std::max(worst, std::abs(binary_entropy(p) - h));
    }
    EXPECT_LT(worst, 1e-10);
}

TEST(InverseBinaryEntropy, TinyEntropies) {
    for (double h : {1e-300, 1e-100, 1e-20, 1e-8}) {
        const double p = inverse_binary_entropy(h);
        EXPECT_GT(p, 0.0);
        EXPECT_LT(std::abs(binary_entropy(p) - h), 1e-10 * std::max(1.0, h));
    }
}

TEST(Fano, FloorAndEquality) {
    const auto eq = fano_report(binary_entropy(0.25), 0.25);
    EXPECT_NEAR(eq.pe_lower_bound, 0.25, 1e-12);
    EXPECT_NEAR(eq.pct_increase_over_pe_min, 0.0, 1e-8);
    // Bound below pe_min: floored at 0.
    const auto gm = golden_mean_machine();
    const auto pi = stationary_distribution(gm);
    const auto floor = fano_report(entropy_rate(gm, pi), min_error_probability(gm, pi));
    EXPECT_LT(floor.pe_lower_bound, 1.0 / 3.0);
    EXPECT_EQ(floor.pct_increase_over_pe_min, 0.0);
    // Bound above pe_min.
    const auto up = fano_report(binary_entropy(0.3), 0.2);
    EXPECT_NEAR(up.pct_increase_over_pe_min, 50.0, 1e-8);
    EXPECT_NEAR(binary_entropy(up.pe_lower_bound), binary_entropy(0.3), 1e-10);
}

TEST(Fano, ZeroPeMinSentinel) {
    EXPECT_TRUE(std::isinf(fano_report(0.1, 0.0).pct_increase_over_pe_min));
    EXPECT_EQ(fano_report(0.0, 0.0).pct_increase_over_pe_min, 0.0);
}

// --- word distributions ---------------------------------------------------------

TEST(Words, GoldenMeanLengthTwo) {
    const auto d = word_distribution(golden_mean_machine(), 2);
    EXPECT_NEAR(d({0, 0}), 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(d({0, 1}), 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(d({1, 0}), 1.0 / 3.0, 1e-15);
    EXPECT_EQ(d({1, 1}), 0.0);
}

TEST(Words, FairCoinLengthThree) {
    const auto d = word_distribution(fair_coin_machine(), 3);
    ASSERT_EQ(d.probability.size(), 8u);
    for (double p : d.probability) EXPECT_DOUBLE_EQ(p, 0.125);
}

TEST(Words, PeriodTwo) {
    const auto d = word_distribution(period2_machine(), 2);
    EXPECT_DOUBLE_EQ(d({0, 1}), 0.5);
    EXPECT_DOUBLE_EQ(d({1, 0}), 0.5);
    EXPECT_EQ(d({0, 0}), 0.0);
    EXPECT_EQ(d({1, 1}), 0.0);
}

TEST(Words, MatchesMatrixProductOracle) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto m = sampled(20, seed);
        const auto pi = stationary_distribution(m);
        const Eigen::RowVectorXd pi_vec = Eigen::Map<const Eigen::RowVectorXd>(pi.pi.data(), m.n_states());
        const int L = 7;
        const auto d = word_distribution(m, pi, L);
        EXPECT_NEAR(std::accumulate(d.probability.begin(), d.probability.end(), 0.0), 1.0, 1e-12);
        for (std::uint64_t w = 0; w < d.probability.size(); ++w) {
            std::vector<int> word(L);
            for (int i = 0; i < L; ++i) word[i] = static_cast<int>((w >> (L - 1 - i)) & 1u);
            EXPECT_NEAR(d.probability[w], oracle::word_probability(m, pi_vec, word), 1e-14);
        }
    }
}

TEST(Words, ThreeSymbolAlphabet) {
    const auto m = sample_epsilon_machine({10, 1.0, 3, 8}).machine;
    const auto pi = stationary_distribution(m);
    const auto d = word_distribution(m, pi, 4);
    EXPECT_EQ(d.probability.size(), 81u);
    EXPECT_NEAR(std::accumulate(d.probability.begin(), d.probability.end(), 0.0), 1.0, 1e-12);
    const Eigen::RowVectorXd pi_vec = Eigen::Map<const Eigen::RowVectorXd>(pi.pi.data(), m.n_states());
    EXPECT_NEAR(d({2, 0, 1, 1}), oracle::word_probability(m, pi_vec, {2, 0, 1, 1}), 1e-15);
}

TEST(Words, Caps) {
    const auto coin = fair_coin_machine();
    EXPECT_THROW(word_distribution(coin, 21), CapExceeded);
    EXPECT_THROW(block_entropy(coin, 21), CapExceeded);
    EXPECT_THROW(myopic_entropy_rate(coin, 20), CapExceeded);
    const auto tri = sample_epsilon_machine({5, 1.0, 3, 1}).machine;
    EXPECT_THROW(block_entropy(tri, 11), UnsupportedAlphabet);
    EXPECT_NO_THROW(block_entropy(tri, 10));
}

// --- block entropy ---------------------------------------------------------------

TEST(BlockEntropy, Examples) {
    const auto gm = golden_mean_machine();
    EXPECT_EQ(block_entropy(gm, 0), 0.0);
    EXPECT_NEAR(block_entropy(gm, 1), binary_entropy(1.0 / 3.0), 1e-15);
    EXPECT_NEAR(block_entropy(gm, 1), 0.6365, 5e-5);
    EXPECT_NEAR(block_entropy(gm, 2), std::log(3.0), 1e-15);
    EXPECT_EQ(block_entropy(sampled(50, 1), 0), 0.0);
}

TEST(BlockEntropy, MatchesOracleAndIsConcave) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto m = sampled(25, seed);
        const auto pi = stationary_distribution(m);
        const Eigen::RowVectorXd pi_vec = Eigen::Map<const Eigen::RowVectorXd>(pi.pi.data(), m.n_states());
        const auto stats = block_statistics(m, pi, 10);
        for (int L = 0; L <= 8; ++L) EXPECT_NEAR(stats.block_entropy[L], oracle::block_entropy(m, pi_vec, L), 1e-12);
        for (int L = 1; L <= 10; ++L) EXPECT_GE(stats.block_entropy[L], stats.block_entropy[L - 1] - 1e-9);
        for (int L = 1; L < 10; ++L)
            EXPECT_LE(stats.block_entropy[L + 1] - stats.block_entropy[L],
                      stats.block_entropy[L] - stats.block_entropy[L - 1] + 1e-9);
    }
}

// --- myopic entropy rate ---------------------------------------------------------

TEST(Myopic, GoldenMeanIsFlatFromOne) {
    const auto c = myopic_entropy_rate(golden_mean_machine(), 6);
    EXPECT_NEAR(c[0], binary_entropy(1.0 / 3.0), 1e-15);
    EXPECT_NEAR(c.h_mu, 2.0 / 3.0 * kLn2, 1e-15);
    for (int m = 1; m <= 6; ++m) EXPECT_NEAR(c[m], c.h_mu, 1e-14);
}

TEST(Myopic, FairCoinIsFlat) {
    const auto c = myopic_entropy_rate(fair_coin_machine(), 10);
    for (int m = 0; m <= 10; ++m) EXPECT_NEAR(c[m], kLn2, 1e-12);
}

TEST(Myopic, EqualsBlockEntropyDifferences) {
    const auto m = sampled(300, 4);
    const auto pi = stationary_distribution(m);
    const auto stats = block_statistics(m, pi, 13);
    const auto c = myopic_entropy_rate(m, pi, 12);
    for (int k = 0; k <= 12; ++k) EXPECT_NEAR(c[k], stats.block_entropy[k + 1] - stats.block_entropy[k], 1e-12);
}

TEST(Myopic, CurveInvariantsOnSampledMachines) {
    for (std::int32_t n : {30, 300}) {
        for (std::uint64_t seed = 0; seed < 6; ++seed) {
            const auto c = myopic_entropy_rate(sampled(n, seed), 12);
            EXPECT_LE(c[0], kLn2 + 1e-12);
            for (int m = 0; m <= 12; ++m) EXPECT_GE(c[m], c.h_mu - 1e-9);
            for (int m = 1; m <= 12; ++m) EXPECT_LE(c[m], c[m - 1] + 1e-9);
            double prev = -1.0;
            for (int m = 0; m <= 12; ++m) {
                const double ip = predictive_information(c, m);
                EXPECT_GE(ip, -1e-9);
                EXPECT_GE(ip, prev - 1e-12);
                prev = ip;
            }
        }
    }
}

TEST(Myopic, WindowErrorBracketsFanoAndOptimum) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto m = sampled(100, seed);
        const auto pi = stationary_distribution(m);
        const auto stats = block_statistics(m, pi, 11);
        const double pe_min = min_error_probability(m, pi);
        for (int k = 0; k <= 10; ++k) {
            const double h = std::min(stats.conditional_entropy[k], kLn2);
            EXPECT_GE(stats.window_error[k], inverse_binary_entropy(h) - 1e-12);
            EXPECT_GE(stats.window_error[k], pe_min - 1e-12);
            if (k > 0) EXPECT_LE(stats.window_error[k], stats.window_error[k - 1] + 1e-12);
        }
    }
}

// --- predictive information ------------------------------------------------------

TEST(PredictiveInformation, Examples) {
    const auto coin = myopic_entropy_rate(fair_coin_machine(), 5);
    for (int m = 0; m <= 5; ++m) EXPECT_NEAR(predictive_information(coin, m), 0.0, 1e-14);

    const auto gm = myopic_entropy_rate(golden_mean_machine(), 5);
    const double expected = binary_entropy(1.0 / 3.0) - 2.0 / 3.0 * kLn2;
    EXPECT_NEAR(expected, 0.1744, 5e-5);
    for (int m = 1; m <= 5; ++m) EXPECT_NEAR(predictive_information(gm, m), expected, 1e-14);

    const auto p2 = myopic_entropy_rate(period2_machine(), 5);
    for (int m = 1; m <= 5; ++m) EXPECT_NEAR(predictive_information(p2, m), kLn2, 1e-14);

    EXPECT_THROW(predictive_information(gm, 6), IndexOutOfRange);
    EXPECT_THROW(predictive_information(gm, -1), IndexOutOfRange);
}

TEST(PredictiveInformation, IncrementIsExcessEntropyRate) {
    const auto c = myopic_entropy_rate(sampled(300, 9), 10);
    for (int m = 0; m < 10; ++m)
        EXPECT_NEAR(predictive_information(c, m + 1) - predictive_information(c, m), c[m + 1] - c.h_mu, 1e-13);
}

// --- log-m process ---------------------------------------------------------------

TEST(LogMProcess, ClosedFormCurve) {
    const auto c = log_m_process_curve(0.5, 2000);
    EXPECT_DOUBLE_EQ(c[0], kLn2);
    EXPECT_DOUBLE_EQ(c[11], 0.5 + 0.1);
    EXPECT_DOUBLE_EQ(c[1001], 0.5 + 1e-3);
    const auto rows = fano_curve(c, inverse_binary_entropy(0.5));
    for (int m = 1; m <= 2000; ++m) EXPECT_LE(rows[m].pct_increase, rows[m - 1].pct_increase);
    EXPECT_GT(rows[10].pct_increase, rows[100].pct_increase);
    EXPECT_GT(rows[100].pct_increase, rows[1000].pct_increase);
}

TEST(CurveCsv, Header) {
    const auto csv = curve_csv(fano_curve(myopic_entropy_rate(golden_mean_machine(), 2), 1.0 / 3.0));
    EXPECT_EQ(csv.rfind("m,h_of_m_nats,h_mu_nats,pe_lower_bound,pe_min,pct_increase\n0,", 0), 0u);
}
