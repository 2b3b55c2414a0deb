#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "depositum/dataset.hpp"
#include "depositum/partition.hpp"
#include "depositum/rng.hpp"

namespace depositum {

using Vector = Eigen::VectorXd;

enum class ModelKind { LogisticBinary, SoftmaxLinear, Mlp1 };

struct ModelSpec {
    ModelKind kind = ModelKind::LogisticBinary;
    /// Hidden width of the one-hidden-layer tanh network.
    int hidden = 8;
};

struct LossGrad {
    double loss;
    Vector grad;
};

/// Smooth local objectives f_i: the mean loss of a model over client i's shard.
///
/// * LogisticBinary: labels +/-1, parameters w in R^d, loss log(1 + exp(-b a.w)).
/// * SoftmaxLinear: k classes, parameters a k x d weight matrix (row-major), cross-entropy.
/// * Mlp1: tanh hidden layer of width m followed by a softmax layer; parameters
///   [W1 (m x d, row-major), b1 (m), W2 (k x m, row-major), b2 (k)].
///
/// Labels are remapped to 0..k-1 for the softmax models; binary data keeps -1 < +1 order.
class Problem {
public:
    /// Splits `pooled` according to `partition`. noise_std > 0 adds IID
    /// N(0, noise_std^2) noise to every stochastic gradient coordinate.
    Problem(ModelSpec spec, const Dataset& pooled, const Partition& partition, double noise_std = 0.0);

    ModelKind kind() const noexcept { return spec_.kind; }
    int clients() const noexcept { return static_cast<int>(shards_.size()); }
    int dim() const noexcept { return param_dim_; }
    int classes() const noexcept { return classes_; }
    double noise_std() const noexcept { return noise_std_; }
    const Dataset& shard(int client) const;

    /// Mean loss and gradient over `batch` (row indices into the client's shard), no noise.
    LossGrad loss_and_grad(const Vector& params, std::span<const int> batch, int client) const;
    /// As above, plus the configured gradient noise drawn from `noise`.
    LossGrad loss_and_grad(const Vector& params, std::span<const int> batch, int client, Rng& noise) const;

    /// Exact shard loss / gradient; never noisy.
    double full_loss(const Vector& params, int client) const;
    Vector full_grad(const Vector& params, int client) const;

    /// Uniform batch of min(B, N_i) distinct rows, fresh from `rng`, then the
    /// noisy batch gradient. B >= N_i uses the whole shard in order.
    Vector stochastic_grad(const Vector& params, int client, int batch_size, Rng& rng) const;

    /// Smoothness constant L. Linear models: max over clients of the power-iteration
    /// estimate of lambda_max(A^T A) / (4 N) (logistic) or / (2 N) (softmax).
    /// Mlp1: twice the largest observed gradient difference quotient over random pairs.
    /// Never below 1e-8.
    double estimate_L(std::uint64_t seed = 0) const;

    /// Fraction of samples classified correctly by `params`.
    double accuracy(const Vector& params, const Dataset& data) const;
    /// Accuracy over the union of all client shards.
    double training_accuracy(const Vector& params) const;

    /// Zeros for the linear models; small Gaussian weights for the MLP.
    Vector initial_params(Rng& rng) const;

    /// Maps a raw dataset label to the label convention the loss expects.
    int encode_label(int raw) const;

private:
    LossGrad evaluate(const Vector& params, const RowMatrix& a, std::span<const int> labels) const;
    void check_params(const Vector& params) const;
    std::vector<int> predict(const Vector& params, const RowMatrix& features) const;

    ModelSpec spec_;
    std::vector<int> raw_classes_;
    int classes_ = 2;
    int feature_dim_ = 0;
    int param_dim_ = 0;
    double noise_std_ = 0.0;
    std::vector<Dataset> shards_;  // labels already encoded
};

/// Distinct uniform sample of min(batch, population) indices in [0, population), sorted.
std::vector<int> sample_batch(int population, int batch, Rng& rng);

/// Largest eigenvalue of A^T A by power iteration (at most `iterations` steps, relative tolerance `tol`).
double power_iteration_gram(const RowMatrix& a, int iterations = 30, double tol = 1e-8);

}  // namespace depositum
