#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace depositum {

/// Per-client vectors stored column-wise: column i is client i's copy (d x n).
using Stacked = Eigen::MatrixXd;

enum class GraphKind { Complete, Ring, Star, EdgeList };
enum class Weighting { Uniform, Metropolis };

struct TopologySpec {
    GraphKind kind = GraphKind::Complete;
    int n = 2;
    Weighting weighting = Weighting::Metropolis;
    /// Only read for GraphKind::EdgeList; unordered pairs of 0-based client ids.
    std::vector<std::pair<int, int>> edges;

    static TopologySpec complete(int n, Weighting w = Weighting::Uniform);
    static TopologySpec ring(int n, Weighting w = Weighting::Uniform);
    static TopologySpec star(int n, Weighting w = Weighting::Metropolis);
    static TopologySpec edge_list(int n, std::vector<std::pair<int, int>> edges,
                                  Weighting w = Weighting::Metropolis);

    /// Deduplicated edge set with i < j. Throws InvalidTopology on bad ids or self-loops.
    std::vector<std::pair<int, int>> edge_set() const;
    std::string describe() const;
};

/// Symmetric doubly stochastic gossip matrix together with its connectivity
/// measure lambda = ||W - 11^T/n||_2.
class MixingMatrix {
public:
    /// Validates symmetry, nonnegativity and unit row sums (1e-12) and computes lambda.
    static MixingMatrix from_weights(Eigen::MatrixXd w);

    int n() const noexcept { return static_cast<int>(w_.rows()); }
    const Eigen::MatrixXd& weights() const noexcept { return w_; }
    double lambda() const noexcept { return lambda_; }

private:
    MixingMatrix(Eigen::MatrixXd w, double lambda) : w_(std::move(w)), lambda_(lambda) {}

    Eigen::MatrixXd w_;
    double lambda_ = 0.0;
};

MixingMatrix build_mixing(const TopologySpec& spec);

/// max(|lambda_2|, |lambda_n|) of a symmetric doubly stochastic matrix.
/// Throws NotStochastic when a row or column sum is off by more than 1e-9.
double spectral_gap(const Eigen::MatrixXd& w);

/// Communication happens at t in {T0, 2 T0, ...}; t = 0 is a local round.
constexpr bool is_comm_round(std::int64_t t, std::int64_t period) noexcept {
    return t > 0 && t % period == 0;
}

/// Column i of the result is sum_j w_ij * column j of `stacked`.
Stacked mix(const Eigen::MatrixXd& w, const Stacked& stacked);
Stacked mix(const MixingMatrix& w, const Stacked& stacked);

struct DeltaParams {
    double delta1;
    double delta2;
};

/// Below this lambda the complete-graph branch of the delta constants is used.
inline constexpr double kLambdaZeroTolerance = 1e-12;

/// Consensus contraction constants for period T0 and the product alpha*rho.
/// Requires 0 <= alpha_rho < 1 - lambda^(1/(2 T0)); throws InadmissibleStep otherwise.
DeltaParams delta_params(double lambda, int period, double alpha_rho);

/// (1 + 3 gamma) / (1 - gamma), the Nesterov amplification of momentum consensus error.
double nesterov_omega(double gamma);

}  // namespace depositum
