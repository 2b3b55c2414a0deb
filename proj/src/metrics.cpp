#include "depositum/metrics.hpp"

#include <cmath>

#include <fmt/format.h>

#include "depositum/errors.hpp"

namespace depositum {

double consensus_sq(const Stacked& stacked) {
    if (stacked.cols() == 0) return 0.0;
    const Vector mean = stacked.rowwise().mean();
    return (stacked.colwise() - mean).squaredNorm();
}

MetricsRecord stationarity_measure(const Stacked& x, const Vector& nu_bar, double alpha, double lipschitz,
                                   const Problem& problem, const Regularizer& h) {
    const auto n = x.cols();
    if (n != problem.clients() || x.rows() != problem.dim() || nu_bar.size() != x.rows()) {
        throw DimensionMismatch(fmt::format("metrics: x is {}x{}, nu_bar has {}, problem has {} clients of dim {}",
                                            x.rows(), x.cols(), nu_bar.size(), problem.clients(), problem.dim()));
    }
    h.check_step(alpha);

    MetricsRecord rec;
    Vector grad_mean = Vector::Zero(x.rows());
    for (Eigen::Index i = 0; i < n; ++i) {
        const Vector xi = x.col(i);
        const Vector gi = problem.full_grad(xi, static_cast<int>(i));
        rec.prox_grad_sq += h.prox_grad_map(alpha, xi, gi).squaredNorm();
        grad_mean += gi;
    }
    grad_mean /= static_cast<double>(n);

    const Vector x_bar = x.rowwise().mean();
    double f_bar = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) f_bar += problem.full_loss(x_bar, static_cast<int>(i));
    rec.loss = f_bar / static_cast<double>(n) + h.eval(x_bar);

    rec.cons_x_sq = consensus_sq(x);
    rec.grad_est_sq = static_cast<double>(n) * (grad_mean - nu_bar).squaredNorm();
    rec.s_over_n = (rec.prox_grad_sq + lipschitz * lipschitz * rec.cons_x_sq + rec.grad_est_sq) / static_cast<double>(n);
    return rec;
}

std::vector<std::pair<double, double>> running_average(std::span<const MetricsRecord> records) {
    std::vector<std::pair<double, double>> out;
    out.reserve(records.size());
    double total = 0.0;
    for (std::size_t k = 0; k < records.size(); ++k) {
        total += records[k].s_over_n;
        out.emplace_back(static_cast<double>(records[k].t + 1), total / static_cast<double>(k + 1));
    }
    return out;
}

DecayFit fit_decay_rate(std::span<const std::pair<double, double>> series, double window) {
    if (!(window > 0.0 && window <= 1.0)) throw InvalidArgument(fmt::format("window must lie in (0, 1], got {}", window));
    std::vector<double> log_t, log_v;
    for (auto [t, v] : series) {
        if (t <= 0.0) continue;
        if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument(fmt::format("series value {} at t={} is not positive", v, t));
        log_t.push_back(std::log(t));
        log_v.push_back(std::log(v));
    }
    const std::size_t count = log_t.size();
    if (count < 10) throw TooFewPoints(fmt::format("need at least 10 points with t > 0, got {}", count));

    // 5% change per decade of t
    const double threshold = std::log(1.05);
    std::size_t begin = count - 1;
    while (begin > 0) {
        const double decades = (log_t.back() - log_t[begin - 1]) / std::log(10.0);
        if (decades <= 0.0 || std::abs(log_v.back() - log_v[begin - 1]) / decades >= threshold) break;
        --begin;
    }
    DecayFit fit;
    fit.plateau_begin = begin == count - 1 ? count : begin;
    const std::size_t head = fit.plateau_begin;
    if (head < 2) return fit;

    const double lo = log_t[head - 1] - window * (log_t[head - 1] - log_t[0]);
    std::size_t first = 0;
    while (first + 2 < head && log_t[first] < lo) ++first;

    double mt = 0.0, mv = 0.0;
    const double m = static_cast<double>(head - first);
    for (std::size_t k = first; k < head; ++k) {
        mt += log_t[k];
        mv += log_v[k];
    }
    mt /= m;
    mv /= m;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = first; k < head; ++k) {
        sxy += (log_t[k] - mt) * (log_v[k] - mv);
        sxx += (log_t[k] - mt) * (log_t[k] - mt);
    }
    fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    fit.fitted = head - first;
    return fit;
}

}  // namespace depositum
