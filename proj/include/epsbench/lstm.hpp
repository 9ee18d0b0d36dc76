#pragma once

// Single-layer LSTM with a logistic readout on the hidden state, trained by
// truncated backpropagation through time and Adam.
//
//   z_t = W [x_t; h_{t-1}] + b,   rows ordered (i, f, g, o)
//   c_t = f * c_{t-1} + i * g,    h_t = o * tanh(c_t)
//   P(x_{t+1} = 1) = sigmoid(a . h_t + c)

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "epsbench/errors.hpp"
#include "epsbench/logistic.hpp"
#include "epsbench/rng.hpp"

namespace epsbench {

struct LstmConfig {
    std::int32_t hidden_size = 110;
    std::int32_t bptt_window = 32;
    double learning_rate = 1e-3;
    std::int32_t max_epochs = 40;
    std::int32_t batch_streams = 16;
    double clip_norm = 1.0;
    std::int32_t patience = 5;
    double validation_fraction = 0.1;
    std::int32_t validation_warmup = 1000;
    std::uint64_t seed = 0;

    void check() const {
        if (hidden_size < 1 || bptt_window < 1 || max_epochs < 1 || batch_streams < 1 || patience < 1)
            throw std::invalid_argument("LSTM sizes, window, epochs, streams and patience must be positive");
        if (!(learning_rate > 0.0) || !(clip_norm > 0.0)) throw std::invalid_argument("learning rate and clip must be > 0");
        if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
            throw std::invalid_argument("validation_fraction must lie in (0, 1)");
        if (validation_warmup < 0) throw std::invalid_argument("validation_warmup must be >= 0");
    }
};

// Flat parameter vector: W (4H x (1+H), column-major), b (4H), a (H), c.
struct LstmParams {
    std::int32_t hidden = 0;
    Eigen::VectorXd theta;

    static Eigen::Index size_for(std::int32_t h) { return 4 * h * (1 + h) + 4 * h + h + 1; }

    Eigen::Map<const Eigen::MatrixXd> w() const { return {theta.data(), 4 * hidden, 1 + hidden}; }
    Eigen::Map<const Eigen::VectorXd> b() const { return {theta.data() + 4 * hidden * (1 + hidden), 4 * hidden}; }
    Eigen::Map<const Eigen::VectorXd> a() const {
        return {theta.data() + 4 * hidden * (1 + hidden) + 4 * hidden, hidden};
    }
    double c() const { return theta(theta.size() - 1); }
};

inline LstmParams init_lstm(std::int32_t hidden, std::uint64_t seed) {
    if (hidden < 1) throw std::invalid_argument("hidden size must be >= 1");
    LstmParams p;
    p.hidden = hidden;
    p.theta = Eigen::VectorXd::Zero(LstmParams::size_for(hidden));
    CounterRng rng(derive_seed(seed, "lstm/init"));
    const double r = 1.0 / std::sqrt(static_cast<double>(hidden));
    const Eigen::Index n_w = 4 * hidden * (1 + hidden);
    for (Eigen::Index i = 0; i < n_w; ++i) p.theta(i) = rng.uniform(-r, r);
    for (std::int32_t k = 0; k < hidden; ++k) p.theta(n_w + hidden + k) = 1.0;  // forget-gate bias
    const Eigen::Index a0 = n_w + 4 * hidden;
    for (std::int32_t k = 0; k < hidden; ++k) p.theta(a0 + k) = rng.uniform(-r, r);
    return p;
}

struct LstmState {
    Eigen::MatrixXd h, c;  // hidden x batch

    static LstmState zero(std::int32_t hidden, Eigen::Index batch) {
        return {Eigen::MatrixXd::Zero(hidden, batch), Eigen::MatrixXd::Zero(hidden, batch)};
    }
};

namespace detail {

inline void sigmoid_inplace(Eigen::Ref<Eigen::MatrixXd> m) {
    m = m.unaryExpr([](double z) { return sigmoid(z); });
}

struct LstmWorkspace {
    std::vector<Eigen::MatrixXd> u, gates, c, tc, h;

    void resize(Eigen::Index steps, std::int32_t hidden, Eigen::Index batch) {
        const auto n = static_cast<std::size_t>(steps);
        if (u.size() == n && (n == 0 || (u[0].cols() == batch && u[0].rows() == 1 + hidden))) return;
        u.assign(n, Eigen::MatrixXd(1 + hidden, batch));
        gates.assign(n, Eigen::MatrixXd(4 * hidden, batch));
        c.assign(n, Eigen::MatrixXd(hidden, batch));
        tc.assign(n, Eigen::MatrixXd(hidden, batch));
        h.assign(n, Eigen::MatrixXd(hidden, batch));
    }
};

}  // namespace detail

// Mean cross-entropy over a window. x has T+1 rows (time) and one column per
// stream; inputs are rows 0..T-1 and targets rows 1..T. The state is read as
// the initial state and overwritten with the final one. When grad is given it
// receives dLoss/dtheta.
inline double lstm_loss_and_gradient(const LstmParams& p, const Eigen::MatrixXd& x, LstmState& state,
                                     Eigen::VectorXd* grad, detail::LstmWorkspace* workspace = nullptr) {
    const std::int32_t H = p.hidden;
    const Eigen::Index T = x.rows() - 1, B = x.cols();
    if (T < 1) throw std::invalid_argument("window needs at least one target");
    detail::LstmWorkspace local;
    auto& ws = workspace ? *workspace : local;
    ws.resize(T, H, B);
    const auto W = p.w();
    const auto bias = p.b();
    const auto a = p.a();
    const double c_out = p.c();

    Eigen::MatrixXd c_prev0 = state.c;
    Eigen::RowVectorXd logit(B);
    double loss = 0.0;
    for (Eigen::Index t = 0; t < T; ++t) {
        auto& u = ws.u[t];
        u.row(0) = x.row(t);
        u.bottomRows(H) = t == 0 ? state.h : ws.h[t - 1];
        auto& z = ws.gates[t];
        z.noalias() = W * u;
        z.colwise() += bias;
        detail::sigmoid_inplace(z.topRows(2 * H));
        z.middleRows(2 * H, H) = z.middleRows(2 * H, H).array().tanh();
        detail::sigmoid_inplace(z.bottomRows(H));
        const auto& cp = t == 0 ? c_prev0 : ws.c[t - 1];
        ws.c[t] = z.middleRows(H, H).cwiseProduct(cp) + z.topRows(H).cwiseProduct(z.middleRows(2 * H, H));
        ws.tc[t] = ws.c[t].array().tanh();
        ws.h[t] = z.bottomRows(H).cwiseProduct(ws.tc[t]);
        logit.noalias() = a.transpose() * ws.h[t];
        for (Eigen::Index s = 0; s < B; ++s) {
            const double l = logit(s) + c_out;
            loss += detail::softplus(l) - x(t + 1, s) * l;
        }
    }
    const double inv = 1.0 / static_cast<double>(T * B);
    loss *= inv;
    state.h = ws.h[T - 1];
    state.c = ws.c[T - 1];
    if (!grad) return loss;

    grad->setZero(p.theta.size());
    const Eigen::Index n_w = 4 * H * (1 + H);
    Eigen::Map<Eigen::MatrixXd> dW(grad->data(), 4 * H, 1 + H);
    Eigen::Map<Eigen::VectorXd> db(grad->data() + n_w, 4 * H);
    Eigen::Map<Eigen::VectorXd> da(grad->data() + n_w + 4 * H, H);
    double& dc_out = (*grad)(grad->size() - 1);

    Eigen::MatrixXd dh_next = Eigen::MatrixXd::Zero(H, B), dc_next = Eigen::MatrixXd::Zero(H, B);
    Eigen::MatrixXd dz(4 * H, B), dh(H, B), dct(H, B), du(1 + H, B);
    Eigen::RowVectorXd dlogit(B);
    for (Eigen::Index t = T - 1; t >= 0; --t) {
        logit.noalias() = a.transpose() * ws.h[t];
        for (Eigen::Index s = 0; s < B; ++s) dlogit(s) = (detail::sigmoid(logit(s) + c_out) - x(t + 1, s)) * inv;
        da.noalias() += ws.h[t] * dlogit.transpose();
        dc_out += dlogit.sum();
        dh.noalias() = a * dlogit;
        dh += dh_next;

        const auto& z = ws.gates[t];
        const auto i = z.topRows(H).array();
        const auto f = z.middleRows(H, H).array();
        const auto g = z.middleRows(2 * H, H).array();
        const auto o = z.bottomRows(H).array();
        const auto tc = ws.tc[t].array();
        const auto& cp = t == 0 ? c_prev0 : ws.c[t - 1];

        dct = (dh.array() * o * (1.0 - tc.square())).matrix() + dc_next;
        dz.bottomRows(H) = (dh.array() * tc * o * (1.0 - o)).matrix();
        dz.topRows(H) = (dct.array() * g * i * (1.0 - i)).matrix();
        dz.middleRows(2 * H, H) = (dct.array() * i * (1.0 - g.square())).matrix();
        dz.middleRows(H, H) = (dct.array() * cp.array() * f * (1.0 - f)).matrix();
        dc_next = (dct.array() * f).matrix();

        dW.noalias() += dz * ws.u[t].transpose();
        db += dz.rowwise().sum();
        du.noalias() = W.transpose() * dz;
        dh_next = du.bottomRows(H);
    }
    return loss;
}

// P(x_t = 1) for t in [begin, end), running the network from the zero state
// at time `start` (default 0).
inline std::vector<double> lstm_probabilities(const LstmParams& p, std::span<const std::uint8_t> series,
                                              std::size_t begin, std::size_t end, std::size_t start = 0) {
    if (end > series.size() || begin > end || start > begin) throw IndexOutOfRange("lstm_probabilities: bad range");
    const std::int32_t H = p.hidden;
    const auto W = p.w();
    const auto bias = p.b();
    const auto a = p.a();
    Eigen::VectorXd h = Eigen::VectorXd::Zero(H), c = Eigen::VectorXd::Zero(H);
    Eigen::VectorXd u(1 + H), z(4 * H);
    std::vector<double> out;
    out.reserve(end - begin);
    for (std::size_t t = start; t < end; ++t) {
        if (t >= begin) out.push_back(detail::sigmoid(a.dot(h) + p.c()));
        u(0) = series[t];
        u.tail(H) = h;
        z.noalias() = W * u;
        z += bias;
        for (Eigen::Index k = 0; k < 2 * H; ++k) z(k) = detail::sigmoid(z(k));
        z.segment(2 * H, H) = z.segment(2 * H, H).array().tanh();
        for (Eigen::Index k = 3 * H; k < 4 * H; ++k) z(k) = detail::sigmoid(z(k));
        c = z.segment(H, H).cwiseProduct(c) + z.head(H).cwiseProduct(z.segment(2 * H, H));
        h = z.tail(H).cwiseProduct(c.array().tanh().matrix());
    }
    return out;
}

inline double lstm_mean_cross_entropy(const LstmParams& p, std::span<const std::uint8_t> series, std::size_t begin,
                                      std::size_t end, std::size_t start) {
    const auto probs = lstm_probabilities(p, series, begin, end, start);
    double loss = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double q = std::clamp(series[begin + i] ? probs[i] : 1.0 - probs[i], 1e-300, 1.0);
        loss -= std::log(q);
    }
    return probs.empty() ? 0.0 : loss / static_cast<double>(probs.size());
}

struct LstmReport {
    std::int32_t epochs = 0;
    std::int32_t best_epoch = 0;
    bool stopped_early = false;
    std::vector<double> train_loss, validation_loss;
};

struct LstmFit {
    LstmParams params;
    LstmReport report;
};

// Trains on the whole given span: the leading (1 - validation_fraction) part
// is split into batch_streams contiguous streams for TBPTT, the tail is the
// validation segment for early stopping.
inline LstmFit train_lstm(const LstmConfig& config, std::span<const std::uint8_t> series) {
    config.check();
    const auto n = series.size();
    if (n <= static_cast<std::size_t>(config.bptt_window) + 1)
        throw std::invalid_argument("series must be longer than the BPTT window");
    const std::int32_t H = config.hidden_size, T = config.bptt_window;
    const auto n_val = std::max<std::size_t>(2, static_cast<std::size_t>(config.validation_fraction * n));
    const auto n_train = n - n_val;
    if (n_train < static_cast<std::size_t>(T) + 1) throw std::invalid_argument("training part shorter than the window");
    const auto streams = static_cast<Eigen::Index>(
        std::clamp<std::size_t>((n_train - 1) / static_cast<std::size_t>(T), 1, config.batch_streams));
    const std::size_t stream_len = (n_train - 1) / static_cast<std::size_t>(streams);
    const std::size_t windows = stream_len / static_cast<std::size_t>(T);

    LstmFit fit;
    fit.params = init_lstm(H, config.seed);
    auto& theta = fit.params.theta;
    Eigen::VectorXd m1 = Eigen::VectorXd::Zero(theta.size()), m2 = Eigen::VectorXd::Zero(theta.size());
    Eigen::VectorXd grad(theta.size());
    const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    std::int64_t step = 0;

    Eigen::MatrixXd x(T + 1, streams);
    detail::LstmWorkspace ws;
    Eigen::VectorXd best = theta;
    double best_val = std::numeric_limits<double>::infinity();
    std::int32_t since_best = 0;
    const std::size_t val_start = n_train > static_cast<std::size_t>(config.validation_warmup)
                                      ? n_train - static_cast<std::size_t>(config.validation_warmup)
                                      : 0;

    for (std::int32_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        auto state = LstmState::zero(H, streams);
        double epoch_loss = 0.0;
        for (std::size_t k = 0; k < windows; ++k) {
            for (Eigen::Index s = 0; s < streams; ++s) {
                const std::size_t base = static_cast<std::size_t>(s) * stream_len + k * static_cast<std::size_t>(T);
                for (std::int32_t t = 0; t <= T; ++t) x(t, s) = series[base + static_cast<std::size_t>(t)];
            }
            const double loss = lstm_loss_and_gradient(fit.params, x, state, &grad, &ws);
            if (!std::isfinite(loss) || !grad.allFinite())
                throw DivergenceDetected("LSTM training loss became non-finite at epoch " + std::to_string(epoch));
            epoch_loss += loss;
            const double norm = grad.norm();
            if (norm > config.clip_norm) grad *= config.clip_norm / norm;
            ++step;
            m1 = beta1 * m1 + (1.0 - beta1) * grad;
            m2 = beta2 * m2 + (1.0 - beta2) * grad.cwiseAbs2();
            const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
            const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
            theta.array() -= config.learning_rate * (m1.array() / c1) / ((m2.array() / c2).sqrt() + eps);
        }
        fit.report.train_loss.push_back(windows ? epoch_loss / static_cast<double>(windows) : 0.0);
        const double val = lstm_mean_cross_entropy(fit.params, series, n_train, n, val_start);
        if (!std::isfinite(val))
            throw DivergenceDetected("LSTM validation loss became non-finite at epoch " + std::to_string(epoch));
        fit.report.validation_loss.push_back(val);
        fit.report.epochs = epoch;
        if (val < best_val) {
            best_val = val;
            best = theta;
            fit.report.best_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= config.patience) {
            fit.report.stopped_early = true;
            break;
        }
    }
    theta = best;
    return fit;
}

}  // namespace epsbench
