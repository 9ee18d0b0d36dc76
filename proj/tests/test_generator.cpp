#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "epsbench/generator.hpp"
#include "epsbench/infotheory.hpp"
#include "epsbench/sampler.hpp"

using namespace epsbench;

TEST(Simulate, ZeroLength) {
    const auto s = simulate(golden_mean_machine(), 0, 1);
    EXPECT_TRUE(s.symbols.empty());
    EXPECT_TRUE(s.states.empty());
}

TEST(Simulate, PeriodTwoAlternates) {
    const auto s = simulate(period2_machine(), 6, 3);
    ASSERT_EQ(s.size(), 6u);
    for (std::size_t t = 1; t < 6; ++t) EXPECT_NE(s.symbols[t], s.symbols[t - 1]);
}

TEST(Simulate, GoldenMeanMarginalAndForbiddenWord) {
    const std::size_t len = 1000000;
    const auto s = simulate(golden_mean_machine(), len, 2024);
    std::vector<double> ones(len);
    for (std::size_t t = 0; t < len; ++t) ones[t] = s.symbols[t];
    EXPECT_NEAR(mean(ones), 1.0 / 3.0, 3.0 * batch_means_standard_error(ones, 100));
    for (std::size_t t = 1; t < len; ++t) ASSERT_FALSE(s.symbols[t] == 1 && s.symbols[t - 1] == 1);
}

TEST(Simulate, ConsistentWithMachine) {
    const auto m = sample_epsilon_machine({300, 1.0, 2, 3}).machine;
    const auto s = simulate(m, 10000, 8);
    EXPECT_TRUE(consistent_with(m, s));
    auto broken = s;
    broken.states[5] = (broken.states[5] + 1) % m.n_states();
    EXPECT_FALSE(consistent_with(m, broken));
}

TEST(Simulate, ReproducibleAndSeedSensitive) {
    const auto m = sample_epsilon_machine({30, 1.0, 2, 4}).machine;
    const auto a = simulate(m, 5000, 77);
    const auto b = simulate(m, 5000, 77);
    const auto c = simulate(m, 5000, 78);
    EXPECT_EQ(a.symbols, b.symbols);
    EXPECT_EQ(a.states, b.states);
    EXPECT_NE(a.symbols, c.symbols);
    const auto prefix = simulate(m, 100, 77);
    EXPECT_TRUE(std::equal(prefix.symbols.begin(), prefix.symbols.end(), a.symbols.begin()));
}

TEST(Simulate, OccupancyMatchesStationary) {
    const auto m = sample_epsilon_machine({30, 1.0, 2, 6}).machine;
    const auto pi = stationary_distribution(m);
    const std::size_t len = 500000;
    const auto s = simulate(m, pi, len, 5);
    for (int st = 0; st < std::min(m.n_states(), 5); ++st) {
        std::vector<double> ind(len);
        for (std::size_t t = 0; t < len; ++t) ind[t] = s.states[t] == st;
        EXPECT_NEAR(mean(ind), pi[st], 4.0 * batch_means_standard_error(ind, 100) + 1e-12);
    }
}

TEST(EmpiricalEntropy, ConvergesToMyopicCurve) {
    const auto gm = golden_mean_machine();
    const auto s = simulate(gm, 1000000, 12);
    const auto curve = myopic_entropy_rate(gm, 4);
    for (int m = 0; m <= 4; ++m) {
        const auto e = empirical_conditional_entropy_with_error(s.symbols, m);
        EXPECT_NEAR(e.value, curve[m], 4.0 * e.standard_error + 1e-4) << m;
    }
}

TEST(EmpiricalEntropy, ConstantSeriesIsZero) {
    const std::vector<std::uint8_t> zeros(1000, 0);
    EXPECT_EQ(empirical_conditional_entropy(zeros, 0), 0.0);
    EXPECT_EQ(empirical_conditional_entropy(zeros, 3), 0.0);
}

TEST(EmpiricalEntropy, AlternatingSeries) {
    std::vector<std::uint8_t> alt(1000);
    for (std::size_t i = 0; i < alt.size(); ++i) alt[i] = i % 2;
    EXPECT_NEAR(empirical_conditional_entropy(alt, 0), std::log(2.0), 1e-12);
    EXPECT_EQ(empirical_conditional_entropy(alt, 1), 0.0);
}

TEST(EmpiricalEntropy, InsufficientData) {
    const auto s = simulate(fair_coin_machine(), 200, 1);
    EXPECT_THROW(empirical_conditional_entropy(s, 10), InsufficientData);
    EXPECT_THROW(empirical_conditional_entropy(std::vector<std::uint8_t>{1, 0}, 2), InsufficientData);
    EXPECT_NO_THROW(empirical_conditional_entropy(s, 2));
}

TEST(SeriesFile, RoundTrip) {
    const auto dir = std::filesystem::temp_directory_path() / "epsbench_series_test";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "gm.txt").string();
    const auto s = simulate(golden_mean_machine(), 4321, 9, {true, "golden_mean"});
    write_series(path, s);
    const auto back = read_series(path);
    EXPECT_EQ(back.symbols, s.symbols);
    EXPECT_EQ(back.seed, 9u);
    EXPECT_EQ(back.machine_id, "golden_mean");
    EXPECT_EQ(std::filesystem::file_size(path), 4321u);
    std::filesystem::remove_all(dir);
}
