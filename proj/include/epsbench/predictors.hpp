#pragma once

// The four readout families compared at matched readout size:
//   RC_LINEAR     reservoir state -> logistic readout
//   RC_QUADRATIC  reservoir state and pairwise products -> logistic readout
//   NGRC          last m symbols and pairwise products -> logistic readout
//   LSTM          hidden state -> logistic readout (trained jointly)
//
// Every family predicts x_t from x_0..x_{t-1}.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "epsbench/errors.hpp"
#include "epsbench/format.hpp"
#include "epsbench/logistic.hpp"
#include "epsbench/lstm.hpp"
#include "epsbench/reservoir.hpp"

namespace epsbench {

enum class Family { RC_LINEAR, RC_QUADRATIC, NGRC, LSTM };

inline constexpr Family kAllFamilies[] = {Family::NGRC, Family::RC_QUADRATIC, Family::RC_LINEAR, Family::LSTM};

inline std::string_view family_name(Family f) {
    switch (f) {
        case Family::RC_LINEAR: return "RC_LINEAR";
        case Family::RC_QUADRATIC: return "RC_QUADRATIC";
        case Family::NGRC: return "NGRC";
        case Family::LSTM: return "LSTM";
    }
    return "?";
}

inline Family parse_family(std::string_view s) {
    for (auto f : kAllFamilies)
        if (family_name(f) == s) return f;
    throw std::invalid_argument("unknown predictor family '" + std::string(s) + "'");
}

struct NgrcConfig {
    std::int32_t m = 10;
};

struct PredictorSpec {
    Family family = Family::NGRC;
    ReservoirConfig reservoir;
    NgrcConfig ngrc;
    LstmConfig lstm;
    double l2_lambda = kDefaultL2Lambda;

    std::int32_t feature_count() const {
        switch (family) {
            case Family::RC_LINEAR: return reservoir.n_nodes;
            case Family::RC_QUADRATIC: return quadratic_feature_count(reservoir.n_nodes);
            case Family::NGRC: return quadratic_feature_count(ngrc.m);
            case Family::LSTM: return lstm.hidden_size;
        }
        return 0;
    }

    // Symbols needed before the first prediction the family can make.
    std::int32_t history() const {
        switch (family) {
            case Family::RC_LINEAR:
            case Family::RC_QUADRATIC: return reservoir.washout;
            case Family::NGRC: return ngrc.m;
            case Family::LSTM: return 0;
        }
        return 0;
    }
};

// NG-RC with window m; RC with m quadratic-readout nodes (the same feature
// count); RC with linear readout and LSTM with m + m^2 nodes.
inline std::vector<PredictorSpec> matched_configs(const NgrcConfig& base, std::uint64_t seed = 0) {
    if (base.m < 1) throw std::invalid_argument("NG-RC window must be >= 1");
    std::vector<PredictorSpec> out;
    PredictorSpec ngrc;
    ngrc.family = Family::NGRC;
    ngrc.ngrc = base;
    out.push_back(ngrc);

    PredictorSpec quad;
    quad.family = Family::RC_QUADRATIC;
    quad.reservoir.n_nodes = base.m;
    quad.reservoir.seed = derive_seed(seed, "rc_quadratic");
    out.push_back(quad);

    PredictorSpec lin;
    lin.family = Family::RC_LINEAR;
    lin.reservoir.n_nodes = base.m + base.m * base.m;
    lin.reservoir.seed = derive_seed(seed, "rc_linear");
    out.push_back(lin);

    PredictorSpec lstm;
    lstm.family = Family::LSTM;
    lstm.lstm.hidden_size = base.m + base.m * base.m;
    lstm.lstm.seed = derive_seed(seed, "lstm");
    out.push_back(lstm);
    return out;
}

struct TrainedPredictor {
    PredictorSpec spec;
    ReservoirParams reservoir;  // RC families
    LstmParams lstm;            // LSTM
    LogisticReadout readout;    // all but LSTM, whose readout lives in lstm
    LogisticReport readout_report;
    LstmReport lstm_report;

    Family family() const { return spec.family; }
    std::int32_t feature_count() const { return spec.feature_count(); }
};

namespace detail {

// Readout feature rows for targets t in [begin, end).
inline Eigen::MatrixXd readout_features(const TrainedPredictor& p, std::span<const std::uint8_t> series,
                                        std::size_t begin, std::size_t end) {
    const auto rows = static_cast<Eigen::Index>(end - begin);
    const auto d = p.spec.feature_count();
    Eigen::MatrixXd f(rows, d);
    switch (p.family()) {
        case Family::NGRC: {
            const auto m = p.spec.ngrc.m;
            Eigen::VectorXd s(m);
            for (Eigen::Index r = 0; r < rows; ++r) {
                const auto t = begin + static_cast<std::size_t>(r);
                for (std::int32_t i = 0; i < m; ++i) s(i) = series[t - 1 - static_cast<std::size_t>(i)];
                write_quadratic_features(s, f.row(r));
            }
            break;
        }
        case Family::RC_LINEAR:
        case Family::RC_QUADRATIC: {
            const auto states = run_reservoir(p.reservoir, series.first(end));
            if (p.family() == Family::RC_LINEAR) {
                f = states.middleRows(static_cast<Eigen::Index>(begin), rows);
            } else {
                for (Eigen::Index r = 0; r < rows; ++r) {
                    const Eigen::VectorXd s = states.row(static_cast<Eigen::Index>(begin) + r).transpose();
                    write_quadratic_features(s, f.row(r));
                }
            }
            break;
        }
        case Family::LSTM: throw std::logic_error("LSTM has no external feature map");
    }
    return f;
}

inline void check_range(const PredictorSpec& spec, std::size_t length, std::size_t begin, std::size_t end) {
    if (begin >= end) throw EmptyRange("prediction range is empty");
    if (end > length) throw IndexOutOfRange("prediction range runs past the series");
    if (begin < static_cast<std::size_t>(spec.history()))
        throw IndexOutOfRange("prediction range starts before the family's required history (" +
                              std::to_string(spec.history()) + " symbols)");
}

}  // namespace detail

// Trains on targets t in [begin, end). Recurrent families consume the
// series from time 0; for LSTM, the span [begin, end) itself is the
// training stream and its tail the validation segment.
inline TrainedPredictor train_predictor(const PredictorSpec& spec, std::span<const std::uint8_t> series,
                                        std::size_t begin, std::size_t end) {
    detail::check_range(spec, series.size(), begin, end);
    for (auto x : series.first(end))
        if (x > 1) throw std::invalid_argument("predictors are binary; symbol > 1 in series");
    TrainedPredictor p;
    p.spec = spec;
    if (spec.family == Family::LSTM) {
        auto fit = train_lstm(spec.lstm, series.subspan(begin, end - begin));
        p.lstm = std::move(fit.params);
        p.lstm_report = std::move(fit.report);
        return p;
    }
    if (spec.family != Family::NGRC) p.reservoir = init_reservoir(spec.reservoir);
    const auto features = detail::readout_features(p, series, begin, end);
    std::vector<std::uint8_t> targets(series.begin() + static_cast<std::ptrdiff_t>(begin),
                                      series.begin() + static_cast<std::ptrdiff_t>(end));
    LogisticOptions opts;
    opts.l2_lambda = spec.l2_lambda;
    auto fit = train_logistic_readout(features, targets, opts);
    p.readout = std::move(fit.readout);
    p.readout_report = std::move(fit.report);
    return p;
}

inline std::vector<double> predict_probabilities(const TrainedPredictor& p, std::span<const std::uint8_t> series,
                                                 std::size_t begin, std::size_t end) {
    detail::check_range(p.spec, series.size(), begin, end);
    if (p.family() == Family::LSTM) return lstm_probabilities(p.lstm, series, begin, end);
    const auto f = detail::readout_features(p, series, begin, end);
    Eigen::VectorXd z = f * p.readout.weights;
    std::vector<double> out(static_cast<std::size_t>(z.size()));
    for (Eigen::Index i = 0; i < z.size(); ++i) out[static_cast<std::size_t>(i)] = detail::sigmoid(z(i) + p.readout.bias);
    return out;
}

// Fraction of t in [begin, end) where the argmax symbol differs from x_t;
// a predicted probability of exactly 0.5 predicts 0.
inline double evaluate_error_rate(const TrainedPredictor& p, std::span<const std::uint8_t> series, std::size_t begin,
                                  std::size_t end) {
    const auto probs = predict_probabilities(p, series, begin, end);
    std::size_t errors = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const std::uint8_t guess = probs[i] > 0.5 ? 1 : 0;
        errors += guess != series[begin + i];
    }
    return static_cast<double>(errors) / static_cast<double>(probs.size());
}

// ---------------------------------------------------------------------------
// Text dump: "key value..." lines; matrices as "name rows cols" followed by
// rows*cols values in column-major order.

namespace detail {

inline void dump_values(std::ostream& os, const std::string& name, const double* v, Eigen::Index rows,
                        Eigen::Index cols) {
    os << name << ' ' << rows << ' ' << cols << '\n';
    for (Eigen::Index i = 0; i < rows * cols; ++i) os << format_exact(v[i]) << (i + 1 == rows * cols ? "" : " ");
    os << '\n';
}

struct TokenReader {
    std::istringstream in;
    explicit TokenReader(const std::string& text) : in(text) {}

    std::string word() {
        std::string w;
        if (!(in >> w)) throw ParseError(0, "predictor dump ends early");
        return w;
    }
    void expect(std::string_view key) {
        const auto w = word();
        if (w != key) throw ParseError(0, "expected '" + std::string(key) + "', found '" + w + "'");
    }
    double number() {
        const auto w = word();
        try {
            std::size_t used = 0;
            const double v = std::stod(w, &used);
            if (used != w.size()) throw std::invalid_argument(w);
            return v;
        } catch (const std::exception&) {
            throw ParseError(0, "bad number '" + w + "'");
        }
    }
    std::int64_t integer() {
        const double v = number();
        if (v != std::floor(v)) throw ParseError(0, "expected an integer");
        return static_cast<std::int64_t>(v);
    }
    Eigen::MatrixXd matrix(std::string_view key) {
        expect(key);
        const auto r = integer(), c = integer();
        Eigen::MatrixXd m(r, c);
        for (Eigen::Index i = 0; i < r * c; ++i) m.data()[i] = number();
        return m;
    }
};

}  // namespace detail

inline std::string dump_predictor(const TrainedPredictor& p) {
    std::ostringstream os;
    const auto& s = p.spec;
    os << "epsbench_predictor 1\n";
    os << "family " << family_name(s.family) << '\n';
    os << "feature_count " << s.feature_count() << '\n';
    os << "l2_lambda " << format_exact(s.l2_lambda) << '\n';
    os << "ngrc_m " << s.ngrc.m << '\n';
    os << "reservoir " << s.reservoir.n_nodes << ' ' << format_exact(s.reservoir.nonlinear_fraction) << ' '
       << format_exact(s.reservoir.spectral_radius) << ' ' << format_exact(s.reservoir.input_scale) << ' '
       << s.reservoir.washout << ' ' << s.reservoir.seed << '\n';
    os << "lstm " << s.lstm.hidden_size << ' ' << s.lstm.bptt_window << ' ' << format_exact(s.lstm.learning_rate) << ' '
       << s.lstm.max_epochs << ' ' << s.lstm.batch_streams << ' ' << format_exact(s.lstm.clip_norm) << ' '
       << s.lstm.patience << ' ' << format_exact(s.lstm.validation_fraction) << ' ' << s.lstm.validation_warmup << ' '
       << s.lstm.seed << '\n';
    if (s.family == Family::LSTM) {
        detail::dump_values(os, "lstm_theta", p.lstm.theta.data(), p.lstm.theta.size(), 1);
    } else {
        os << "readout_bias " << format_exact(p.readout.bias) << '\n';
        detail::dump_values(os, "readout_weights", p.readout.weights.data(), p.readout.weights.size(), 1);
        if (s.family != Family::NGRC) {
            const auto& r = p.reservoir;
            detail::dump_values(os, "w_linear", r.w_linear.data(), r.w_linear.rows(), r.w_linear.cols());
            detail::dump_values(os, "w_nonlinear", r.w_nonlinear.data(), r.w_nonlinear.rows(), r.w_nonlinear.cols());
            detail::dump_values(os, "v_linear", r.v_linear.data(), r.v_linear.size(), 1);
            detail::dump_values(os, "v_nonlinear", r.v_nonlinear.data(), r.v_nonlinear.size(), 1);
        }
    }
    return os.str();
}

inline TrainedPredictor load_predictor(const std::string& text) {
    detail::TokenReader in(text);
    in.expect("epsbench_predictor");
    if (in.integer() != 1) throw ParseError(1, "unsupported predictor dump version");
    TrainedPredictor p;
    auto& s = p.spec;
    in.expect("family");
    try {
        s.family = parse_family(in.word());
    } catch (const std::invalid_argument& e) {
        throw ParseError(2, e.what());
    }
    in.expect("feature_count");
    const auto fc = in.integer();
    in.expect("l2_lambda");
    s.l2_lambda = in.number();
    in.expect("ngrc_m");
    s.ngrc.m = static_cast<std::int32_t>(in.integer());
    in.expect("reservoir");
    s.reservoir.n_nodes = static_cast<std::int32_t>(in.integer());
    s.reservoir.nonlinear_fraction = in.number();
    s.reservoir.spectral_radius = in.number();
    s.reservoir.input_scale = in.number();
    s.reservoir.washout = static_cast<std::int32_t>(in.integer());
    s.reservoir.seed = std::stoull(in.word());
    in.expect("lstm");
    s.lstm.hidden_size = static_cast<std::int32_t>(in.integer());
    s.lstm.bptt_window = static_cast<std::int32_t>(in.integer());
    s.lstm.learning_rate = in.number();
    s.lstm.max_epochs = static_cast<std::int32_t>(in.integer());
    s.lstm.batch_streams = static_cast<std::int32_t>(in.integer());
    s.lstm.clip_norm = in.number();
    s.lstm.patience = static_cast<std::int32_t>(in.integer());
    s.lstm.validation_fraction = in.number();
    s.lstm.validation_warmup = static_cast<std::int32_t>(in.integer());
    s.lstm.seed = std::stoull(in.word());
    if (fc != s.feature_count()) throw ParseError(3, "feature_count disagrees with the family configuration");
    if (s.family == Family::LSTM) {
        p.lstm.hidden = s.lstm.hidden_size;
        p.lstm.theta = in.matrix("lstm_theta");
        if (p.lstm.theta.size() != LstmParams::size_for(p.lstm.hidden))
            throw ParseError(0, "LSTM parameter count disagrees with hidden size");
    } else {
        in.expect("readout_bias");
        p.readout.bias = in.number();
        p.readout.weights = in.matrix("readout_weights");
        p.readout.l2_lambda = s.l2_lambda;
        if (p.readout.weights.size() != fc) throw ParseError(0, "readout weight count disagrees with feature_count");
        if (s.family != Family::NGRC) {
            p.reservoir.config = s.reservoir;
            p.reservoir.w_linear = in.matrix("w_linear");
            p.reservoir.w_nonlinear = in.matrix("w_nonlinear");
            p.reservoir.v_linear = in.matrix("v_linear");
            p.reservoir.v_nonlinear = in.matrix("v_nonlinear");
            if (p.reservoir.n_nodes() != s.reservoir.n_nodes)
                throw ParseError(0, "reservoir size disagrees with configuration");
        }
    }
    return p;
}

// ---------------------------------------------------------------------------
// Results CSV

inline constexpr std::string_view kPredictorCsvHeader =
    "machine_id,family,feature_count,train_len,test_len,pe,pe_min,pct_increase,fano_bound";

struct PredictorResultRow {
    std::string machine_id;
    Family family = Family::NGRC;
    std::int32_t feature_count = 0;
    std::size_t train_len = 0, test_len = 0;
    double pe = 0.0, pe_min = 0.0, pct_increase = 0.0, fano_bound = 0.0;
};

inline std::string predictor_csv_row(const PredictorResultRow& r) {
    std::ostringstream os;
    os << r.machine_id << ',' << family_name(r.family) << ',' << r.feature_count << ',' << r.train_len << ','
       << r.test_len << ',' << format_number(r.pe) << ',' << format_number(r.pe_min) << ','
       << format_number(r.pct_increase) << ',' << format_number(r.fano_bound);
    return os.str();
}

}  // namespace epsbench
