#pragma once

// L2-regularized logistic regression trained by Newton's method with a
// backtracking line search. The objective is
//   J(a, b) = mean_i [log(1 + e^{z_i}) - y_i z_i] + (lambda / 2) |a|^2,
//   z_i = a . f_i + b,
// with the bias left unregularized. Features are standardized before the
// fit and the weights mapped back, so lambda acts on standardized weights.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "epsbench/errors.hpp"

namespace epsbench {

inline constexpr double kDefaultL2Lambda = 1e-4;

struct LogisticReadout {
    Eigen::VectorXd weights;
    double bias = 0.0;
    double l2_lambda = kDefaultL2Lambda;

    double logit(const Eigen::Ref<const Eigen::VectorXd>& f) const { return weights.dot(f) + bias; }
    double probability(const Eigen::Ref<const Eigen::VectorXd>& f) const {
        return 1.0 / (1.0 + std::exp(-logit(f)));
    }
};

struct LogisticOptions {
    double l2_lambda = kDefaultL2Lambda;
    double gradient_tolerance = 1e-6;
    std::int32_t max_iterations = 10000;
};

struct LogisticReport {
    std::int32_t iterations = 0;
    bool converged = false;
    double gradient_inf_norm = 0.0;
    std::vector<double> objective;  // J at the start and after every step
};

struct LogisticFit {
    LogisticReadout readout;
    LogisticReport report;
};

namespace detail {

inline double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace detail

template <typename Derived>
inline LogisticFit train_logistic_readout(const Eigen::MatrixBase<Derived>& features,
                                          const std::vector<std::uint8_t>& targets,
                                          const LogisticOptions& options = {}) {
    const Eigen::Index n = features.rows(), d = features.cols();
    if (n < 1) throw std::invalid_argument("logistic readout needs at least one training pair");
    if (static_cast<Eigen::Index>(targets.size()) != n)
        throw std::invalid_argument("feature rows and targets differ in count");
    if (!(options.l2_lambda >= 0.0)) throw std::invalid_argument("l2_lambda must be >= 0");
    for (auto y : targets)
        if (y > 1) throw std::invalid_argument("logistic targets must be 0 or 1");
    if (!features.allFinite()) throw NonFiniteFeature("feature matrix contains NaN or inf");

    // Standardize columns; constant columns are only centered.
    const Eigen::RowVectorXd center = features.colwise().mean();
    Eigen::MatrixXd x = features.rowwise() - center;
    Eigen::RowVectorXd scale = (x.colwise().squaredNorm() / static_cast<double>(n)).cwiseSqrt();
    for (Eigen::Index j = 0; j < d; ++j)
        if (!(scale(j) > 1e-12)) scale(j) = 1.0;
    x.array().rowwise() /= scale.array();

    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = targets[static_cast<std::size_t>(i)];
    const double lambda = options.l2_lambda;
    const double inv_n = 1.0 / static_cast<double>(n);

    Eigen::VectorXd a = Eigen::VectorXd::Zero(d);
    const double ybar = y.mean();
    double b = (ybar > 0.0 && ybar < 1.0) ? std::log(ybar / (1.0 - ybar)) : 0.0;

    Eigen::VectorXd z(n);
    auto objective = [&](const Eigen::VectorXd& aa, double bb, Eigen::VectorXd& zz) {
        zz.noalias() = x * aa;
        zz.array() += bb;
        double j = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) j += detail::softplus(zz(i)) - y(i) * zz(i);
        return j * inv_n + 0.5 * lambda * aa.squaredNorm();
    };

    LogisticFit fit;
    auto& rep = fit.report;
    double j = objective(a, b, z);
    rep.objective.push_back(j);
    const Eigen::Index chunk = 4096;
    Eigen::VectorXd r(n), w(n), trial_z(n);
    for (;;) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const double p = detail::sigmoid(z(i));
            r(i) = p - y(i);
            w(i) = p * (1.0 - p);
        }
        Eigen::VectorXd g(d + 1);
        g.head(d).noalias() = x.transpose() * r;
        g.head(d) = g.head(d) * inv_n + lambda * a;
        g(d) = r.sum() * inv_n;
        rep.gradient_inf_norm = g.cwiseAbs().maxCoeff();
        if (rep.gradient_inf_norm < options.gradient_tolerance) {
            rep.converged = true;
            break;
        }
        if (rep.iterations >= options.max_iterations) break;

        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d + 1, d + 1);
        for (Eigen::Index s = 0; s < n; s += chunk) {
            const auto len = std::min(chunk, n - s);
            const auto xc = x.middleRows(s, len);
            const auto wc = w.segment(s, len);
            Eigen::MatrixXd wx = xc.array().colwise() * wc.array();
            h.topLeftCorner(d, d).noalias() += xc.transpose() * wx;
            h.block(0, d, d, 1).noalias() += xc.transpose() * wc;
        }
        h.topLeftCorner(d, d) *= inv_n;
        h.block(0, d, d, 1) *= inv_n;
        h.block(d, 0, 1, d) = h.block(0, d, d, 1).transpose();
        h(d, d) = w.sum() * inv_n;
        h.topLeftCorner(d, d).diagonal().array() += lambda;

        Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
        Eigen::VectorXd step = -ldlt.solve(g);
        double slope = g.dot(step);
        if (!step.allFinite() || !(slope < 0.0)) {
            step = -g;
            slope = -g.squaredNorm();
        }

        double t = 1.0, j_new = j;
        Eigen::VectorXd a_new;
        double b_new = b;
        bool accepted = false;
        for (int k = 0; k < 60; ++k, t *= 0.5) {
            a_new = a + t * step.head(d);
            b_new = b + t * step(d);
            j_new = objective(a_new, b_new, trial_z);
            if (std::isfinite(j_new) && j_new <= j + 1e-4 * t * slope) {
                accepted = true;
                break;
            }
        }
        ++rep.iterations;
        if (!accepted) break;  // no further decrease representable
        a = std::move(a_new);
        b = b_new;
        j = j_new;
        z.swap(trial_z);
        rep.objective.push_back(j);
    }

    auto& ro = fit.readout;
    ro.l2_lambda = lambda;
    ro.weights = (a.array() / scale.transpose().array()).matrix();
    ro.bias = b - ro.weights.dot(center.transpose());
    return fit;
}

}  // namespace epsbench
