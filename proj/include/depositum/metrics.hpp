#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "depositum/problem.hpp"
#include "depositum/regularizers.hpp"
#include "depositum/topology.hpp"

namespace depositum {

/// Stationarity decomposition of one iterate x^t paired with the momentum
/// average produced in the same iteration, nu_bar^{t+1}.
///
///   s = ||G^alpha(x)||^2 + L^2 ||Jx - x||^2 + n ||mean_i grad f_i(x_i) - nu_bar||^2
///
/// where G^alpha stacks the per-client proximal gradients computed with full
/// local gradients. s_over_n = s / n.
struct MetricsRecord {
    std::int64_t t = 0;
    double loss = 0.0;  // phi(x_bar) = mean_i f_i(x_bar) + h(x_bar)
    double prox_grad_sq = 0.0;
    double cons_x_sq = 0.0;
    double cons_y_sq = 0.0;
    double cons_nu_sq = 0.0;
    double grad_est_sq = 0.0;
    double s_over_n = 0.0;
    std::optional<double> accuracy;
};

/// ||Jz - z||^2 for stacked per-client vectors.
double consensus_sq(const Stacked& stacked);

/// Fills loss, prox_grad_sq, cons_x_sq, grad_est_sq and s_over_n; the y / nu
/// consensus terms and accuracy are left for the caller.
MetricsRecord stationarity_measure(const Stacked& x, const Vector& nu_bar, double alpha, double lipschitz,
                                   const Problem& problem, const Regularizer& h);

/// Points (t + 1, (1/(t+1)) * sum_{tau <= t} s_over_n(tau)) over the records given.
/// With records at every iteration this is the running average bounded by the
/// sublinear-rate theory; sparser records give the average over recorded points.
std::vector<std::pair<double, double>> running_average(std::span<const MetricsRecord> records);

struct DecayFit {
    double slope = 0.0;
    /// Index of the first point in the detected plateau (== size when none).
    std::size_t plateau_begin = 0;
    /// Number of points used by the least-squares fit.
    std::size_t fitted = 0;
};

/// Least-squares slope of log(value) against log(t) before the plateau.
///
/// The plateau is the longest suffix over which the value moves by less than
/// 5% per decade of t, measured against the final point. `window` in (0, 1]
/// selects the trailing fraction (in log t) of the pre-plateau segment that is
/// fitted. Points with t <= 0 are ignored. Throws TooFewPoints below 10 usable
/// points and InvalidArgument on non-positive values or a bad window.
DecayFit fit_decay_rate(std::span<const std::pair<double, double>> series, double window = 1.0);

}  // namespace depositum
