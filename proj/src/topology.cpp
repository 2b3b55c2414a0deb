#include "depositum/topology.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>

#include <fmt/format.h>

#include "depositum/errors.hpp"

namespace depositum {
namespace {

void require_clients(int n, GraphKind kind) {
    // A lone client only makes sense as the trivial complete graph.
    if (n < 1 || (n == 1 && kind != GraphKind::Complete)) {
        throw InvalidTopology(fmt::format("topology needs n >= 2 clients, got {}", n));
    }
}

bool connected(int n, const std::vector<std::pair<int, int>>& edges) {
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
    for (auto [i, j] : edges) {
        adj[i].push_back(j);
        adj[j].push_back(i);
    }
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    std::queue<int> frontier;
    frontier.push(0);
    seen[0] = true;
    int visited = 1;
    while (!frontier.empty()) {
        const int u = frontier.front();
        frontier.pop();
        for (int v : adj[u]) {
            if (!seen[v]) {
                seen[v] = true;
                ++visited;
                frontier.push(v);
            }
        }
    }
    return visited == n;
}

const char* kind_name(GraphKind k) {
    switch (k) {
        case GraphKind::Complete: return "complete";
        case GraphKind::Ring: return "ring";
        case GraphKind::Star: return "star";
        case GraphKind::EdgeList: return "edgelist";
    }
    return "?";
}

}  // namespace

TopologySpec TopologySpec::complete(int n, Weighting w) { return {GraphKind::Complete, n, w, {}}; }
TopologySpec TopologySpec::ring(int n, Weighting w) { return {GraphKind::Ring, n, w, {}}; }
TopologySpec TopologySpec::star(int n, Weighting w) { return {GraphKind::Star, n, w, {}}; }
TopologySpec TopologySpec::edge_list(int n, std::vector<std::pair<int, int>> edges, Weighting w) {
    return {GraphKind::EdgeList, n, w, std::move(edges)};
}

std::vector<std::pair<int, int>> TopologySpec::edge_set() const {
    require_clients(n, kind);
    std::set<std::pair<int, int>> out;
    switch (kind) {
        case GraphKind::Complete:
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j) out.emplace(i, j);
            break;
        case GraphKind::Ring:
            for (int i = 0; i < n; ++i) {
                const int j = (i + 1) % n;
                out.emplace(std::min(i, j), std::max(i, j));
            }
            break;
        case GraphKind::Star:
            for (int j = 1; j < n; ++j) out.emplace(0, j);
            break;
        case GraphKind::EdgeList:
            for (auto [i, j] : edges) {
                if (i < 0 || j < 0 || i >= n || j >= n) {
                    throw InvalidTopology(fmt::format("edge ({}, {}) references a client outside [0, {})", i, j, n));
                }
                if (i == j) throw InvalidTopology(fmt::format("self-loop at client {}", i));
                out.emplace(std::min(i, j), std::max(i, j));
            }
            break;
    }
    return {out.begin(), out.end()};
}

std::string TopologySpec::describe() const {
    return fmt::format("{}({}, {})", kind_name(kind), n,
                       weighting == Weighting::Uniform ? "uniform" : "metropolis");
}

MixingMatrix MixingMatrix::from_weights(Eigen::MatrixXd w) {
    if (w.rows() != w.cols() || w.rows() == 0) {
        throw DimensionMismatch(fmt::format("mixing matrix must be square, got {}x{}", w.rows(), w.cols()));
    }
    if ((w - w.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw NonDoublyStochastic("mixing matrix is not symmetric");
    if (w.minCoeff() < 0.0) throw NonDoublyStochastic("mixing matrix has negative weights");
    const double row_err = (w.rowwise().sum().array() - 1.0).abs().maxCoeff();
    if (row_err > 1e-12) {
        throw NonDoublyStochastic(fmt::format("mixing matrix rows deviate from 1 by {}", row_err));
    }
    const double lambda = spectral_gap(w);
    return MixingMatrix(std::move(w), lambda);
}

MixingMatrix build_mixing(const TopologySpec& spec) {
    const auto edges = spec.edge_set();
    const int n = spec.n;
    if (!connected(n, edges)) throw DisconnectedGraph(spec.describe() + " is not connected");

    std::vector<int> degree(static_cast<std::size_t>(n), 0);
    for (auto [i, j] : edges) {
        ++degree[i];
        ++degree[j];
    }

    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    if (spec.weighting == Weighting::Uniform) {
        if (std::adjacent_find(degree.begin(), degree.end(), std::not_equal_to<>()) != degree.end()) {
            throw NonDoublyStochastic(spec.describe() +
                                      ": uniform weighting is only doubly stochastic on regular graphs");
        }
        const double weight = 1.0 / (degree[0] + 1.0);
        for (auto [i, j] : edges) w(i, j) = w(j, i) = weight;
        for (int i = 0; i < n; ++i) w(i, i) = weight;
    } else {
        for (auto [i, j] : edges) w(i, j) = w(j, i) = 1.0 / (1.0 + std::max(degree[i], degree[j]));
        for (int i = 0; i < n; ++i) w(i, i) = 1.0 - (w.row(i).sum() - w(i, i));
    }
    return MixingMatrix::from_weights(std::move(w));
}

double spectral_gap(const Eigen::MatrixXd& w) {
    if (w.rows() != w.cols()) throw DimensionMismatch("spectral_gap needs a square matrix");
    const double row_err = (w.rowwise().sum().array() - 1.0).abs().maxCoeff();
    const double col_err = (w.colwise().sum().array() - 1.0).abs().maxCoeff();
    if (row_err > 1e-9 || col_err > 1e-9) {
        throw NotStochastic(fmt::format("row/column sums deviate from 1 by {}", std::max(row_err, col_err)));
    }
    const auto n = w.rows();
    const Eigen::MatrixXd centered = w - Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(centered, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().cwiseAbs().maxCoeff();
}

Stacked mix(const Eigen::MatrixXd& w, const Stacked& stacked) {
    if (w.rows() != stacked.cols() || w.cols() != stacked.cols()) {
        throw DimensionMismatch(
            fmt::format("mix: {}x{} weights against {} client slots", w.rows(), w.cols(), stacked.cols()));
    }
    // (X W^T)_{:,i} = sum_j w_ij X_{:,j}
    return stacked * w.transpose();
}

Stacked mix(const MixingMatrix& w, const Stacked& stacked) { return mix(w.weights(), stacked); }

DeltaParams delta_params(double lambda, int period, double alpha_rho) {
    if (period < 1) throw InadmissibleStep(fmt::format("communication period must be >= 1, got {}", period));
    if (!(lambda >= 0.0 && lambda < 1.0)) throw InadmissibleStep(fmt::format("lambda must lie in [0, 1), got {}", lambda));
    const double t0 = period;
    const double window = 1.0 - std::pow(lambda, 1.0 / (2.0 * t0));
    if (!(alpha_rho >= 0.0 && alpha_rho < window)) {
        throw InadmissibleStep(fmt::format("alpha*rho = {} outside [0, 1 - lambda^(1/(2 T0))) = [0, {})",
                                           alpha_rho, window));
    }
    if (lambda <= kLambdaZeroTolerance) {
        // T0^T0 / (1+T0)^(T0+1), in logs so large periods do not overflow
        const double base = std::exp(t0 * std::log(t0) - (t0 + 1.0) * std::log1p(t0));
        return {base * std::pow(1.0 - alpha_rho, 2.0 * t0 + 2.0), base};
    }
    const double lam_t0 = std::pow(lambda, 1.0 / t0);
    const double scale = lambda * (1.0 - lambda);
    return {scale * ((1.0 - alpha_rho) * (1.0 - alpha_rho) - lam_t0), scale * (1.0 - lam_t0)};
}

double nesterov_omega(double gamma) { return (1.0 + 3.0 * gamma) / (1.0 - gamma); }

}  // namespace depositum
