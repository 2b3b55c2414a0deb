#include "depositum/regularizers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "depositum/errors.hpp"

namespace depositum {
namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double soft_threshold(double v, double tau) {
    const double mag = std::abs(v) - tau;
    return mag > 0.0 ? std::copysign(mag, v) : 0.0;
}

bool finite_positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

Regularizer Regularizer::zero() { return Regularizer(ZeroPenalty{}); }

Regularizer Regularizer::l1(double weight) {
    if (!(std::isfinite(weight) && weight >= 0.0)) {
        throw InvalidRegularizer(fmt::format("l1 weight must be finite and >= 0, got {}", weight));
    }
    return Regularizer(L1Penalty{weight});
}

Regularizer Regularizer::mcp(double lam, double theta) {
    if (!finite_positive(lam) || !finite_positive(theta)) {
        throw InvalidRegularizer(fmt::format("mcp needs lam > 0 and theta > 0, got lam={} theta={}", lam, theta));
    }
    return Regularizer(McpPenalty{lam, theta});
}

Regularizer Regularizer::scad(double lam, double a) {
    if (!finite_positive(lam) || !(std::isfinite(a) && a > 2.0)) {
        throw InvalidRegularizer(fmt::format("scad needs lam > 0 and a > 2, got lam={} a={}", lam, a));
    }
    return Regularizer(ScadPenalty{lam, a});
}

Regularizer Regularizer::box(double lo, double hi) {
    if (std::isnan(lo) || std::isnan(hi) || lo > hi) {
        throw InvalidRegularizer(fmt::format("box needs lo <= hi, got [{}, {}]", lo, hi));
    }
    return Regularizer(BoxIndicator{lo, hi});
}

std::string Regularizer::name() const {
    return std::visit(overloaded{
                          [](const ZeroPenalty&) { return std::string("zero"); },
                          [](const L1Penalty&) { return std::string("l1"); },
                          [](const McpPenalty&) { return std::string("mcp"); },
                          [](const ScadPenalty&) { return std::string("scad"); },
                          [](const BoxIndicator&) { return std::string("box"); },
                      },
                      kind_);
}

double Regularizer::weak_modulus() const noexcept {
    return std::visit(overloaded{
                          [](const McpPenalty& p) { return 1.0 / p.theta; },
                          [](const ScadPenalty& p) { return 1.0 / (p.a - 1.0); },
                          [](const auto&) { return 0.0; },
                      },
                      kind_);
}

double Regularizer::eval_scalar(double z) const {
    return std::visit(
        overloaded{
            [](const ZeroPenalty&) { return 0.0; },
            [z](const L1Penalty& p) { return p.weight * std::abs(z); },
            [z](const McpPenalty& p) {
                const double az = std::abs(z);
                if (az <= p.theta * p.lam) return p.lam * az - z * z / (2.0 * p.theta);
                return 0.5 * p.theta * p.lam * p.lam;
            },
            [z](const ScadPenalty& p) {
                const double az = std::abs(z);
                if (az <= p.lam) return p.lam * az;
                if (az <= p.a * p.lam) {
                    return (2.0 * p.a * p.lam * az - z * z - p.lam * p.lam) / (2.0 * (p.a - 1.0));
                }
                return 0.5 * p.lam * p.lam * (p.a + 1.0);
            },
            [z](const BoxIndicator& p) {
                return (z < p.lo || z > p.hi) ? std::numeric_limits<double>::infinity() : 0.0;
            },
        },
        kind_);
}

double Regularizer::eval(const Vector& x) const {
    double total = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) total += eval_scalar(x[i]);
    return total;
}

void Regularizer::check_step(double alpha) const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw StepTooLarge(fmt::format("prox step must be positive and finite, got {}", alpha));
    }
    const double rho = weak_modulus();
    if (alpha * rho >= 1.0) {
        throw StepTooLarge(
            fmt::format("{} prox is ill-posed: alpha * rho = {} * {} >= 1", name(), alpha, rho));
    }
}

double Regularizer::prox_scalar(double alpha, double v) const {
    return std::visit(
        overloaded{
            [v](const ZeroPenalty&) { return v; },
            [alpha, v](const L1Penalty& p) { return soft_threshold(v, alpha * p.weight); },
            [alpha, v](const McpPenalty& p) {
                // |v| <= theta*lam: scaled soft threshold; outside the penalty is flat.
                if (std::abs(v) <= p.theta * p.lam) {
                    return soft_threshold(v, alpha * p.lam) / (1.0 - alpha / p.theta);
                }
                return v;
            },
            [alpha, v](const ScadPenalty& p) {
                const double av = std::abs(v);
                if (av <= p.lam * (1.0 + alpha)) return soft_threshold(v, alpha * p.lam);
                if (av <= p.a * p.lam) {
                    return ((p.a - 1.0) * v - std::copysign(p.a * alpha * p.lam, v)) / (p.a - 1.0 - alpha);
                }
                return v;
            },
            [v](const BoxIndicator& p) { return std::clamp(v, p.lo, p.hi); },
        },
        kind_);
}

Vector Regularizer::prox(double alpha, const Vector& x) const {
    check_step(alpha);
    Vector out(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = prox_scalar(alpha, x[i]);
    return out;
}

Vector Regularizer::prox_grad_map(double alpha, const Vector& x, const Vector& v) const {
    if (x.size() != v.size()) {
        throw DimensionMismatch(fmt::format("prox_grad_map: x has {} entries, v has {}", x.size(), v.size()));
    }
    return (x - prox(alpha, x - alpha * v)) / alpha;
}

}  // namespace depositum
