#pragma once

#include <string>
#include <variant>

#include <Eigen/Dense>

namespace depositum {

using Vector = Eigen::VectorXd;

struct ZeroPenalty {};
struct L1Penalty {
    double weight;
};
/// Minimax concave penalty, Zhang's parameterization.
struct McpPenalty {
    double lam;
    double theta;
};
/// Smoothly clipped absolute deviation, Fan-Li parameterization.
struct ScadPenalty {
    double lam;
    double a;
};
/// Indicator of the box [lo, hi] applied coordinate-wise.
struct BoxIndicator {
    double lo;
    double hi;
};

using PenaltyKind = std::variant<ZeroPenalty, L1Penalty, McpPenalty, ScadPenalty, BoxIndicator>;

/// Separable, weakly convex nonsmooth term h.
///
/// Proximal maps use the step-size convention
///
///     prox(alpha, x) = argmin_z  h(z) + (1 / (2 alpha)) ||z - x||^2,
///
/// i.e. the quadratic coefficient is 1/(2 alpha). The minimizer is unique iff
/// alpha * weak_modulus() < 1; calls outside that window throw StepTooLarge.
class Regularizer {
public:
    Regularizer() = default;

    static Regularizer zero();
    static Regularizer l1(double weight);
    static Regularizer mcp(double lam, double theta);
    static Regularizer scad(double lam, double a);
    static Regularizer box(double lo, double hi);

    const PenaltyKind& kind() const noexcept { return kind_; }
    std::string name() const;

    /// rho such that h + (rho/2)||.||^2 is convex.
    double weak_modulus() const noexcept;

    /// h(x); +infinity for a box indicator evaluated outside its bounds.
    double eval(const Vector& x) const;
    double eval_scalar(double z) const;

    Vector prox(double alpha, const Vector& x) const;
    double prox_scalar(double alpha, double v) const;

    /// (x - prox(alpha, x - alpha * v)) / alpha. With v = grad f(x) this is the
    /// proximal gradient; with v = a momentum estimate it is its approximate variant.
    Vector prox_grad_map(double alpha, const Vector& x, const Vector& v) const;

    /// Throws StepTooLarge unless alpha > 0 and alpha * rho < 1.
    void check_step(double alpha) const;

private:
    explicit Regularizer(PenaltyKind kind) : kind_(kind) {}

    PenaltyKind kind_ = ZeroPenalty{};
};

}  // namespace depositum
