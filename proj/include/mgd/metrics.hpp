#pragma once

// Standard single-image depth evaluation statistics and least-squares
// scale/shift alignment.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mgd/error.hpp"

namespace mgd {

inline constexpr double kIndoorCap = 10.0;
inline constexpr double kOutdoorCap = 80.0;
inline constexpr double kMinPredictedDepth = 1e-3;

/// rows x cols depth map (meters, row-major) with a validity mask and an evaluation cap.
class DepthRaster {
public:
    DepthRaster(std::size_t rows, std::size_t cols, std::vector<double> values,
                std::vector<std::uint8_t> mask, double cap)
        : rows_(rows), cols_(cols), values_(std::move(values)), mask_(std::move(mask)), cap_(cap) {
        if (rows_ == 0 || cols_ == 0) throw DimensionError("DepthRaster: empty shape");
        if (values_.size() != rows_ * cols_ || mask_.size() != values_.size()) {
            throw DimensionError("DepthRaster: value/mask count does not match shape");
        }
        if (!(cap_ > 0.0) || !std::isfinite(cap_)) throw DomainError("DepthRaster: cap must be > 0");
        for (std::size_t i = 0; i < values_.size(); ++i) {
            if (mask_[i] && !std::isfinite(values_[i])) {
                throw NumericError("DepthRaster: non-finite value at valid pixel " + std::to_string(i));
            }
        }
    }

    /// Pixels outside (0, cap] or non-finite are masked out.
    static DepthRaster ground_truth(std::size_t rows, std::size_t cols, std::vector<double> values,
                                    double cap = kIndoorCap) {
        std::vector<std::uint8_t> mask(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) {
            mask[i] = std::isfinite(values[i]) && values[i] > 0.0 && values[i] <= cap;
        }
        return DepthRaster(rows, cols, std::move(values), std::move(mask), cap);
    }

    /// Every finite pixel is valid; range is enforced by clamping at evaluation.
    static DepthRaster prediction(std::size_t rows, std::size_t cols, std::vector<double> values,
                                  double cap = kIndoorCap) {
        std::vector<std::uint8_t> mask(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) mask[i] = std::isfinite(values[i]);
        return DepthRaster(rows, cols, std::move(values), std::move(mask), cap);
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return values_.size(); }
    double cap() const { return cap_; }
    const std::vector<double>& values() const { return values_; }
    const std::vector<std::uint8_t>& mask() const { return mask_; }
    double value(std::size_t i) const { return values_[i]; }
    bool valid(std::size_t i) const { return mask_[i] != 0; }

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> values_;
    std::vector<std::uint8_t> mask_;
    double cap_;
};

struct MetricReport {
    double silog = 0.0;
    double abs_rel = 0.0;
    double rms = 0.0;
    double rms_log = 0.0;
    double sq_rel = 0.0;
    double irms = 0.0;        ///< 1/km
    double delta1 = 0.0;
    double delta2 = 0.0;
    double delta3 = 0.0;
    double irms_per_m = 0.0;  ///< same statistic in 1/m
    std::size_t valid_pixels = 0;
};

namespace detail {

inline void require_same_shape(const DepthRaster& a, const DepthRaster& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionError(std::string(what) + ": rasters differ in shape");
    }
}

inline bool gt_in_range(const DepthRaster& gt, std::size_t i) {
    return gt.valid(i) && gt.value(i) > 0.0 && gt.value(i) <= gt.cap();
}

}  // namespace detail

/**
 * Statistics over pixels valid in both rasters whose ground truth lies in
 * (0, cap], with cap taken from `gt`. Predictions are clamped to
 * [1e-3, cap] before any logarithm.
 */
inline MetricReport evaluate(const DepthRaster& pred, const DepthRaster& gt) {
    detail::require_same_shape(pred, gt, "evaluate");
    const double cap = gt.cap();
    std::vector<double> p, g;
    p.reserve(pred.size());
    g.reserve(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!pred.valid(i) || !detail::gt_in_range(gt, i)) continue;
        p.push_back(std::clamp(pred.value(i), kMinPredictedDepth, cap));
        g.push_back(gt.value(i));
    }
    if (p.empty()) throw DomainError("evaluate: no jointly valid pixels");

    const auto count = static_cast<double>(p.size());
    std::vector<double> log_diff(p.size());
    double mean_d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        log_diff[i] = std::log(p[i]) - std::log(g[i]);
        mean_d += log_diff[i];
    }
    mean_d /= count;

    MetricReport rep;
    rep.valid_pixels = p.size();
    double var_d = 0.0, sq_d = 0.0, abs_rel = 0.0, sq_err = 0.0, sq_rel = 0.0, inv_sq = 0.0;
    std::size_t within[3] = {0, 0, 0};
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = log_diff[i];
        var_d += (d - mean_d) * (d - mean_d);
        sq_d += d * d;
        const double err = p[i] - g[i];
        abs_rel += std::abs(err) / g[i];
        sq_err += err * err;
        sq_rel += err * err / g[i];
        const double inv = 1.0 / p[i] - 1.0 / g[i];
        inv_sq += inv * inv;
        const double ratio = std::max(p[i] / g[i], g[i] / p[i]);
        if (ratio < 1.25) ++within[0];
        if (ratio < 1.25 * 1.25) ++within[1];
        if (ratio < 1.25 * 1.25 * 1.25) ++within[2];
    }
    rep.silog = 100.0 * std::sqrt(var_d / count);
    rep.abs_rel = abs_rel / count;
    rep.rms = std::sqrt(sq_err / count);
    rep.rms_log = std::sqrt(sq_d / count);
    rep.sq_rel = sq_rel / count;
    rep.irms_per_m = std::sqrt(inv_sq / count);
    rep.irms = 1000.0 * rep.irms_per_m;
    rep.delta1 = static_cast<double>(within[0]) / count;
    rep.delta2 = static_cast<double>(within[1]) / count;
    rep.delta3 = static_cast<double>(within[2]) / count;
    return rep;
}

struct Alignment {
    double scale = 1.0;
    double shift = 0.0;
    DepthRaster aligned;
};

/// Least-squares (s, t) minimizing sum (s pred + t - gt)^2 over jointly valid
/// pixels; the map is applied to every valid prediction pixel.
inline Alignment align_scale_shift(const DepthRaster& pred, const DepthRaster& gt) {
    detail::require_same_shape(pred, gt, "align_scale_shift");
    double mean_p = 0.0, mean_g = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!pred.valid(i) || !detail::gt_in_range(gt, i)) continue;
        mean_p += pred.value(i);
        mean_g += gt.value(i);
        ++count;
    }
    if (count < 2) throw DomainError("align_scale_shift: need at least 2 jointly valid pixels");
    mean_p /= static_cast<double>(count);
    mean_g /= static_cast<double>(count);
    double spp = 0.0, spg = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (!pred.valid(i) || !detail::gt_in_range(gt, i)) continue;
        const double dp = pred.value(i) - mean_p;
        spp += dp * dp;
        spg += dp * (gt.value(i) - mean_g);
    }
    if (!(spp > 1e-24 * static_cast<double>(count) * std::max(1.0, mean_p * mean_p))) {
        throw DomainError("align_scale_shift: prediction is constant over the valid pixels");
    }
    const double s = spg / spp;
    const double t = mean_g - s * mean_p;
    std::vector<double> values = pred.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (pred.valid(i)) values[i] = s * values[i] + t;
    }
    return {s, t, DepthRaster(pred.rows(), pred.cols(), std::move(values), pred.mask(), pred.cap())};
}

}  // namespace mgd
