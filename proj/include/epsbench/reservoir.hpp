#pragma once

// Reservoir computers with a linear block and a tanh block:
//   s^l_{t+1}  = W^l s^l_t + v^l x_t
//   s^nl_{t+1} = tanh(W^nl s^nl_t + v^nl x_t)
// The full state is [s^l; s^nl]. The two blocks do not interact.

#include <cmath>
#include <cstdint>
#include <span>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "epsbench/errors.hpp"
#include "epsbench/rng.hpp"

namespace epsbench {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ReservoirConfig {
    std::int32_t n_nodes = 110;
    double nonlinear_fraction = 0.5;
    double spectral_radius = 0.99;
    double input_scale = 1.0;
    std::int32_t washout = 100;
    std::uint64_t seed = 0;

    std::int32_t n_nonlinear() const { return static_cast<std::int32_t>(std::lround(n_nodes * nonlinear_fraction)); }
    std::int32_t n_linear() const { return n_nodes - n_nonlinear(); }

    void check() const {
        if (n_nodes < 1) throw std::invalid_argument("reservoir needs at least one node");
        if (!(nonlinear_fraction >= 0.0 && nonlinear_fraction <= 1.0))
            throw std::invalid_argument("nonlinear_fraction must lie in [0, 1]");
        if (!(spectral_radius > 0.0)) throw std::invalid_argument("spectral_radius must be > 0");
        if (!(input_scale > 0.0)) throw std::invalid_argument("input_scale must be > 0");
        if (washout < 0) throw std::invalid_argument("washout must be >= 0");
    }
};

struct ReservoirParams {
    ReservoirConfig config;
    Eigen::MatrixXd w_linear, w_nonlinear;
    Eigen::VectorXd v_linear, v_nonlinear;

    std::int32_t n_nodes() const { return static_cast<std::int32_t>(v_linear.size() + v_nonlinear.size()); }
};

// Largest eigenvalue modulus.
inline double spectral_radius(const Eigen::MatrixXd& w) {
    if (w.size() == 0) return 0.0;
    if (w.rows() == 1) return std::abs(w(0, 0));
    Eigen::EigenSolver<Eigen::MatrixXd> es(w, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

namespace detail {

inline Eigen::MatrixXd random_recurrent_block(std::int32_t k, double radius, std::uint64_t key) {
    Eigen::MatrixXd w(k, k);
    CounterRng rng(key);
    const double scale = 1.0 / std::sqrt(static_cast<double>(std::max(k, 1)));
    for (std::int32_t i = 0; i < k; ++i)
        for (std::int32_t j = 0; j < k; ++j) w(i, j) = rng.normal() * scale;
    const double rho = spectral_radius(w);
    if (rho > 0.0) w *= radius / rho;
    return w;
}

inline Eigen::VectorXd random_input_weights(std::int32_t k, double scale, std::uint64_t key) {
    Eigen::VectorXd v(k);
    CounterRng rng(key);
    for (std::int32_t i = 0; i < k; ++i) v(i) = rng.uniform(-scale, scale);
    return v;
}

}  // namespace detail

inline ReservoirParams init_reservoir(const ReservoirConfig& config) {
    config.check();
    ReservoirParams p;
    p.config = config;
    const auto nl = config.n_linear(), nn = config.n_nonlinear();
    p.w_linear = detail::random_recurrent_block(nl, config.spectral_radius, derive_seed(config.seed, "reservoir/w_linear"));
    p.w_nonlinear =
        detail::random_recurrent_block(nn, config.spectral_radius, derive_seed(config.seed, "reservoir/w_nonlinear"));
    p.v_linear = detail::random_input_weights(nl, config.input_scale, derive_seed(config.seed, "reservoir/v_linear"));
    p.v_nonlinear =
        detail::random_input_weights(nn, config.input_scale, derive_seed(config.seed, "reservoir/v_nonlinear"));
    return p;
}

// Row t holds the state after consuming x_0..x_{t-1}; row 0 is the zero
// initial state, so the result has series.size() + 1 rows.
inline RowMatrix run_reservoir(const ReservoirParams& p, std::span<const std::uint8_t> series) {
    const auto nl = p.v_linear.size(), nn = p.v_nonlinear.size();
    RowMatrix states = RowMatrix::Zero(static_cast<Eigen::Index>(series.size()) + 1, nl + nn);
    Eigen::VectorXd sl = Eigen::VectorXd::Zero(nl), snl = Eigen::VectorXd::Zero(nn);
    Eigen::VectorXd tmp_l(nl), tmp_nl(nn);
    for (std::size_t t = 0; t < series.size(); ++t) {
        const double x = series[t];
        tmp_l.noalias() = p.w_linear * sl;
        sl = tmp_l + p.v_linear * x;
        tmp_nl.noalias() = p.w_nonlinear * snl;
        snl = (tmp_nl + p.v_nonlinear * x).array().tanh().matrix();
        auto row = states.row(static_cast<Eigen::Index>(t) + 1);
        row.head(nl) = sl.transpose();
        row.tail(nn) = snl.transpose();
    }
    return states;
}

// ---------------------------------------------------------------------------
// Polynomial features

inline std::int32_t quadratic_feature_count(std::int32_t k) { return k + k * (k + 1) / 2; }

// v followed by v_i v_j for i <= j, row-major over the upper triangle.
template <typename Vec, typename Out>
inline void write_quadratic_features(const Vec& v, Out&& out) {
    const auto k = static_cast<Eigen::Index>(v.size());
    Eigen::Index c = 0;
    for (Eigen::Index i = 0; i < k; ++i) out(c++) = v(i);
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = i; j < k; ++j) out(c++) = v(i) * v(j);
}

inline Eigen::VectorXd quadratic_features(const Eigen::VectorXd& v) {
    Eigen::VectorXd out(quadratic_feature_count(static_cast<std::int32_t>(v.size())));
    write_quadratic_features(v, out);
    return out;
}

// Shift-register features s_t = (x_t, ..., x_{t-m+1}) plus their pairwise
// products; they predict x_{t+1}.
inline Eigen::VectorXd ngrc_features(std::span<const std::uint8_t> series, std::int32_t m, std::int64_t t) {
    if (m < 1) throw std::invalid_argument("NG-RC window must be >= 1");
    if (t < m - 1 || t >= static_cast<std::int64_t>(series.size()))
        throw IndexOutOfRange("ngrc_features: t must lie in [m-1, length)");
    Eigen::VectorXd s(m);
    for (std::int32_t i = 0; i < m; ++i) s(i) = series[static_cast<std::size_t>(t - i)];
    return quadratic_features(s);
}

}  // namespace epsbench
