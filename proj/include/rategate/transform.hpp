#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <optional>
#include <stdexcept>

#include "rategate/trace.hpp"

namespace rategate {

// Parameters of the ratio-of-rates transform: the smoothing factor delta and
// the positive floor epsilon applied before forming cyclic column ratios.
struct TransformParams {
    double delta = 0.5;
    double epsilon = 1e-6;
};

template <typename Scalar>
struct AffineNormalized {
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> unit;  // entries in [0, 1]
    Scalar min = Scalar(0);
    Scalar max = Scalar(0);
};

// Per-sample increments: row k of the result is X[k+1] - X[k].
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> first_difference(
    const Eigen::MatrixBase<Derived>& counters) {
    if (counters.rows() < 2) throw std::invalid_argument("first_difference needs at least 2 rows");
    return counters.bottomRows(counters.rows() - 1) - counters.topRows(counters.rows() - 1);
}

// Affine rescale of all entries to the unit interval using the global extrema.
// A degenerate input (max == min) maps to the midpoint 0.5 everywhere.
template <typename Derived>
AffineNormalized<typename Derived::Scalar> affine_normalize(const Eigen::MatrixBase<Derived>& increments) {
    using Scalar = typename Derived::Scalar;
    if (increments.size() == 0) throw std::invalid_argument("affine_normalize needs a non-empty matrix");
    AffineNormalized<Scalar> result;
    result.min = increments.minCoeff();
    result.max = increments.maxCoeff();
    if (result.max == result.min) {
        result.unit.setConstant(increments.rows(), increments.cols(), Scalar(0.5));
    } else {
        result.unit = ((increments.array() - result.min) / (result.max - result.min)).matrix();
    }
    return result;
}

// First-order exponential smoothing down each column:
// B[0] = A[0], B[k] = delta * B[k-1] + (1 - delta) * A[k].
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> exp_smooth(
    const Eigen::MatrixBase<Derived>& unit, double delta) {
    using Scalar = typename Derived::Scalar;
    if (!(delta >= 0.0 && delta <= 1.0)) throw std::invalid_argument("delta must be in [0, 1]");
    if (unit.rows() < 1) throw std::invalid_argument("exp_smooth needs at least 1 row");
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> smoothed(unit.rows(), unit.cols());
    smoothed.row(0) = unit.row(0);
    const Scalar d = Scalar(delta);
    for (Eigen::Index k = 1; k < unit.rows(); ++k)
        smoothed.row(k) = d * smoothed.row(k - 1) + (Scalar(1) - d) * unit.row(k);
    return smoothed;
}

// Cyclic column ratios after flooring at epsilon:
// C[k][j] = max(B[k][j], eps) / max(B[k][(j+1) mod N], eps).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> rate_ratios(
    const Eigen::MatrixBase<Derived>& smoothed, double epsilon) {
    using Scalar = typename Derived::Scalar;
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    if (smoothed.cols() < 2) throw std::invalid_argument("rate_ratios needs at least 2 columns");
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> floored =
        smoothed.array().max(Scalar(epsilon)).matrix();
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> ratios(smoothed.rows(), smoothed.cols());
    const Eigen::Index n = smoothed.cols();
    for (Eigen::Index j = 0; j < n; ++j)
        ratios.col(j) = floored.col(j).cwiseQuotient(floored.col((j + 1) % n));
    return ratios;
}

// Full pipeline output: every intermediate stage plus the normalization
// constants, so downstream consumers can freeze them for online use.
template <typename Scalar>
struct RateRatios {
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> normalized;
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> smoothed;
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> ratios;
    Scalar norm_min = Scalar(0);
    Scalar norm_max = Scalar(0);
};

using RateRatioMatrix = RateRatios<double>;

// Batch ratio-of-rates transform: difference, normalize, smooth, ratio.
// Input has M rows of cumulative counters; output stages have M - 1 rows.
template <typename Derived>
RateRatios<typename Derived::Scalar> ratio_of_rates_transform(const Eigen::MatrixBase<Derived>& counters,
                                                              const TransformParams& params = {}) {
    using Scalar = typename Derived::Scalar;
    if (counters.cols() < 2) throw std::invalid_argument("transform needs at least 2 features");
    auto increments = first_difference(counters);
    auto normalized = affine_normalize(increments);
    RateRatios<Scalar> result;
    result.norm_min = normalized.min;
    result.norm_max = normalized.max;
    result.smoothed = exp_smooth(normalized.unit, params.delta);
    result.ratios = rate_ratios(result.smoothed, params.epsilon);
    result.normalized = std::move(normalized.unit);
    return result;
}

inline RateRatioMatrix ratio_of_rates_transform(const Trace& trace, const TransformParams& params = {}) {
    trace.validate();
    return ratio_of_rates_transform(trace.samples, params);
}

// Online counterpart of the batch transform. Normalization constants are
// frozen up front (taken from a trained model), so each arriving counter
// sample can be mapped to a ratio row immediately. Normalized increments are
// clamped back into [0, 1] when live data escapes the frozen range.
class StreamState {
  public:
    StreamState(double norm_min, double norm_max, const TransformParams& params = {})
        : params_(params), norm_min_(norm_min), norm_max_(norm_max) {
        if (!(params.delta >= 0.0 && params.delta <= 1.0))
            throw std::invalid_argument("delta must be in [0, 1]");
        if (!(params.epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    }

    double norm_min() const { return norm_min_; }
    double norm_max() const { return norm_max_; }
    const TransformParams& params() const { return params_; }

    // Number of ratio rows emitted so far.
    Index emitted() const { return emitted_; }

    // Feed the next cumulative counter sample. The first call only primes the
    // differencer and yields nothing; every later call yields one ratio row.
    std::optional<RowVector> step(const RowVector& sample) {
        if (sample.size() < 2) throw std::invalid_argument("stream sample needs at least 2 features");
        if (!previous_) {
            previous_ = sample;
            return std::nullopt;
        }
        if (previous_->size() != sample.size())
            throw std::invalid_argument("stream sample arity changed mid-stream");

        RowVector increment = sample - *previous_;
        *previous_ = sample;

        RowVector unit(increment.size());
        if (norm_max_ == norm_min_) {
            unit.setConstant(0.5);
        } else {
            for (Index j = 0; j < increment.size(); ++j) {
                const double a = (increment(j) - norm_min_) / (norm_max_ - norm_min_);
                unit(j) = std::clamp(a, 0.0, 1.0);
            }
        }

        if (emitted_ == 0) {
            smoothed_ = unit;
        } else {
            const double d = params_.delta;
            smoothed_ = d * smoothed_ + (1.0 - d) * unit;
        }
        ++emitted_;

        RowVector floored = smoothed_.array().max(params_.epsilon).matrix();
        const Index n = floored.size();
        RowVector ratios(n);
        for (Index j = 0; j < n; ++j) ratios(j) = floored(j) / floored((j + 1) % n);
        return ratios;
    }

  private:
    TransformParams params_;
    double norm_min_;
    double norm_max_;
    std::optional<RowVector> previous_;
    RowVector smoothed_;
    Index emitted_ = 0;
};

// One online step as a free function, for callers that hold the state.
inline std::optional<RowVector> streaming_transform_step(StreamState& state, const RowVector& sample) {
    return state.step(sample);
}

}  // namespace rategate
