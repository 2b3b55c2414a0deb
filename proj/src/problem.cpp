#include "depositum/problem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include <fmt/format.h>

#include "depositum/errors.hpp"

namespace depositum {
namespace {

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

RowMatrix gather_rows(const RowMatrix& a, std::span<const int> rows) {
    RowMatrix out(static_cast<Eigen::Index>(rows.size()), a.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = a.row(rows[r]);
    return out;
}

// Row-wise softmax cross-entropy. Overwrites `scores` with (P - Y) / rows and returns the mean loss.
double softmax_xent(RowMatrix& scores, std::span<const int> labels) {
    const auto rows = scores.rows();
    double loss = 0.0;
    for (Eigen::Index r = 0; r < rows; ++r) {
        const double m = scores.row(r).maxCoeff();
        scores.row(r).array() = (scores.row(r).array() - m).exp();
        const double z = scores.row(r).sum();
        const int y = labels[static_cast<std::size_t>(r)];
        loss += std::log(z) - std::log(scores(r, y));
        scores.row(r) /= z;
        scores(r, y) -= 1.0;
    }
    scores /= static_cast<double>(rows);
    return loss / static_cast<double>(rows);
}

}  // namespace

Problem::Problem(ModelSpec spec, const Dataset& pooled, const Partition& partition, double noise_std)
    : spec_(spec), noise_std_(noise_std) {
    if (pooled.samples() < 1) throw InvalidProblem("problem needs a nonempty dataset");
    if (pooled.labels.size() != static_cast<std::size_t>(pooled.samples())) {
        throw InvalidProblem("label count does not match sample count");
    }
    if (!(noise_std >= 0.0)) throw InvalidProblem(fmt::format("noise std must be >= 0, got {}", noise_std));
    if (partition.clients() < 1) throw InvalidProblem("partition has no clients");

    raw_classes_ = pooled.classes();
    classes_ = static_cast<int>(raw_classes_.size());
    feature_dim_ = static_cast<int>(pooled.dim());

    switch (spec_.kind) {
        case ModelKind::LogisticBinary:
            if (!pooled.is_binary()) throw InvalidProblem("logistic regression needs labels in {-1, +1}");
            classes_ = 2;
            param_dim_ = feature_dim_;
            break;
        case ModelKind::SoftmaxLinear:
            classes_ = std::max(classes_, 2);
            param_dim_ = classes_ * feature_dim_;
            break;
        case ModelKind::Mlp1:
            if (spec_.hidden < 1) throw InvalidProblem(fmt::format("hidden width must be >= 1, got {}", spec_.hidden));
            classes_ = std::max(classes_, 2);
            param_dim_ = spec_.hidden * feature_dim_ + spec_.hidden + classes_ * spec_.hidden + classes_;
            break;
    }

    shards_.reserve(static_cast<std::size_t>(partition.clients()));
    for (const auto& rows : partition.assignments) {
        if (rows.empty()) throw InvalidProblem("every client needs at least one sample");
        Dataset shard = pooled.subset(rows);
        for (int& b : shard.labels) b = encode_label(b);
        shards_.push_back(std::move(shard));
    }
}

int Problem::encode_label(int raw) const {
    if (spec_.kind == ModelKind::LogisticBinary) {
        if (raw != 1 && raw != -1) throw InvalidProblem(fmt::format("label {} is not +/-1", raw));
        return raw;
    }
    const auto it = std::lower_bound(raw_classes_.begin(), raw_classes_.end(), raw);
    if (it == raw_classes_.end() || *it != raw) throw InvalidProblem(fmt::format("label {} unseen in training data", raw));
    return static_cast<int>(it - raw_classes_.begin());
}

const Dataset& Problem::shard(int client) const {
    if (client < 0 || client >= clients()) {
        throw IndexOutOfRange(fmt::format("client {} outside [0, {})", client, clients()));
    }
    return shards_[static_cast<std::size_t>(client)];
}

void Problem::check_params(const Vector& params) const {
    if (params.size() != param_dim_) {
        throw DimensionMismatch(fmt::format("expected {} parameters, got {}", param_dim_, params.size()));
    }
}

LossGrad Problem::evaluate(const Vector& params, const RowMatrix& a, std::span<const int> labels) const {
    const double rows = static_cast<double>(a.rows());
    switch (spec_.kind) {
        case ModelKind::LogisticBinary: {
            const Vector margin = a * params;
            Vector weight(a.rows());
            double loss = 0.0;
            for (Eigen::Index r = 0; r < a.rows(); ++r) {
                const double b = labels[static_cast<std::size_t>(r)];
                const double z = b * margin[r];
                loss += softplus(-z);
                weight[r] = -b * sigmoid(-z);
            }
            return {loss / rows, a.transpose() * weight / rows};
        }
        case ModelKind::SoftmaxLinear: {
            const Eigen::Map<const RowMatrix> w(params.data(), classes_, feature_dim_);
            RowMatrix scores = a * w.transpose();
            const double loss = softmax_xent(scores, labels);
            Vector grad(param_dim_);
            Eigen::Map<RowMatrix>(grad.data(), classes_, feature_dim_) = scores.transpose() * a;
            return {loss, std::move(grad)};
        }
        case ModelKind::Mlp1: {
            const int m = spec_.hidden;
            const int d = feature_dim_;
            const int k = classes_;
            const double* p = params.data();
            const Eigen::Map<const RowMatrix> w1(p, m, d);
            const Eigen::Map<const Vector> b1(p + m * d, m);
            const Eigen::Map<const RowMatrix> w2(p + m * d + m, k, m);
            const Eigen::Map<const Vector> b2(p + m * d + m + k * m, k);

            RowMatrix hidden = a * w1.transpose();
            hidden.rowwise() += b1.transpose();
            hidden = hidden.array().tanh().matrix();
            RowMatrix scores = hidden * w2.transpose();
            scores.rowwise() += b2.transpose();
            const double loss = softmax_xent(scores, labels);

            Vector grad(param_dim_);
            double* g = grad.data();
            Eigen::Map<RowMatrix>(g + m * d + m, k, m) = scores.transpose() * hidden;
            Eigen::Map<Vector>(g + m * d + m + k * m, k) = scores.colwise().sum().transpose();
            RowMatrix back = scores * w2;
            back.array() *= 1.0 - hidden.array().square();
            Eigen::Map<RowMatrix>(g, m, d) = back.transpose() * a;
            Eigen::Map<Vector>(g + m * d, m) = back.colwise().sum().transpose();
            return {loss, std::move(grad)};
        }
    }
    throw InvalidProblem("unknown model kind");
}

LossGrad Problem::loss_and_grad(const Vector& params, std::span<const int> batch, int client) const {
    check_params(params);
    const Dataset& data = shard(client);
    if (batch.empty()) throw IndexOutOfRange("empty batch");
    std::vector<int> labels;
    labels.reserve(batch.size());
    for (int r : batch) {
        if (r < 0 || r >= data.samples()) {
            throw IndexOutOfRange(fmt::format("batch row {} outside client {} shard of {} samples", r, client,
                                              data.samples()));
        }
        labels.push_back(data.labels[static_cast<std::size_t>(r)]);
    }
    return evaluate(params, gather_rows(data.features, batch), labels);
}

LossGrad Problem::loss_and_grad(const Vector& params, std::span<const int> batch, int client, Rng& noise) const {
    LossGrad out = loss_and_grad(params, batch, client);
    if (noise_std_ > 0.0) {
        std::normal_distribution<double> normal(0.0, noise_std_);
        for (Eigen::Index j = 0; j < out.grad.size(); ++j) out.grad[j] += normal(noise);
    }
    return out;
}

double Problem::full_loss(const Vector& params, int client) const {
    check_params(params);
    const Dataset& data = shard(client);
    return evaluate(params, data.features, data.labels).loss;
}

Vector Problem::full_grad(const Vector& params, int client) const {
    check_params(params);
    const Dataset& data = shard(client);
    return evaluate(params, data.features, data.labels).grad;
}

Vector Problem::stochastic_grad(const Vector& params, int client, int batch_size, Rng& rng) const {
    const Dataset& data = shard(client);
    const int population = static_cast<int>(data.samples());
    if (batch_size < 1) throw InvalidProblem(fmt::format("batch size must be >= 1, got {}", batch_size));
    Vector grad;
    if (batch_size >= population) {
        grad = full_grad(params, client);
    } else {
        check_params(params);
        const auto batch = sample_batch(population, batch_size, rng);
        std::vector<int> labels;
        labels.reserve(batch.size());
        for (int r : batch) labels.push_back(data.labels[static_cast<std::size_t>(r)]);
        grad = evaluate(params, gather_rows(data.features, batch), labels).grad;
    }
    if (noise_std_ > 0.0) {
        std::normal_distribution<double> normal(0.0, noise_std_);
        for (Eigen::Index j = 0; j < grad.size(); ++j) grad[j] += normal(rng);
    }
    return grad;
}

double Problem::estimate_L(std::uint64_t seed) const {
    constexpr double kFloor = 1e-8;
    double best = 0.0;
    if (spec_.kind != ModelKind::Mlp1) {
        const double curvature = spec_.kind == ModelKind::LogisticBinary ? 4.0 : 2.0;
        for (const Dataset& s : shards_) {
            best = std::max(best, power_iteration_gram(s.features) / (curvature * static_cast<double>(s.samples())));
        }
        return std::max(best, kFloor);
    }

    constexpr int kPairs = 20;
    for (int c = 0; c < clients(); ++c) {
        Rng rng = rng_stream(seed, static_cast<std::uint64_t>(c), 0, stream::kLipschitz);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (int k = 0; k < kPairs; ++k) {
            Vector u(param_dim_), v(param_dim_);
            for (Eigen::Index j = 0; j < param_dim_; ++j) {
                u[j] = 0.5 * normal(rng);
                v[j] = u[j] + 0.05 * normal(rng);
            }
            const double gap = (u - v).norm();
            if (gap == 0.0) continue;
            best = std::max(best, (full_grad(u, c) - full_grad(v, c)).norm() / gap);
        }
    }
    return std::max(2.0 * best, kFloor);
}

std::vector<int> Problem::predict(const Vector& params, const RowMatrix& features) const {
    check_params(params);
    if (features.cols() != feature_dim_) {
        throw DimensionMismatch(fmt::format("dataset has {} features, model expects {}", features.cols(), feature_dim_));
    }
    std::vector<int> out(static_cast<std::size_t>(features.rows()));
    if (spec_.kind == ModelKind::LogisticBinary) {
        const Vector margin = features * params;
        for (Eigen::Index r = 0; r < features.rows(); ++r) out[static_cast<std::size_t>(r)] = margin[r] >= 0.0 ? 1 : -1;
        return out;
    }
    RowMatrix scores;
    if (spec_.kind == ModelKind::SoftmaxLinear) {
        scores = features * Eigen::Map<const RowMatrix>(params.data(), classes_, feature_dim_).transpose();
    } else {
        const int m = spec_.hidden;
        const int d = feature_dim_;
        const double* p = params.data();
        RowMatrix hidden = features * Eigen::Map<const RowMatrix>(p, m, d).transpose();
        hidden.rowwise() += Eigen::Map<const Vector>(p + m * d, m).transpose();
        hidden = hidden.array().tanh().matrix();
        scores = hidden * Eigen::Map<const RowMatrix>(p + m * d + m, classes_, m).transpose();
        scores.rowwise() += Eigen::Map<const Vector>(p + m * d + m + classes_ * m, classes_).transpose();
    }
    for (Eigen::Index r = 0; r < features.rows(); ++r) {
        Eigen::Index best = 0;
        scores.row(r).maxCoeff(&best);
        out[static_cast<std::size_t>(r)] = static_cast<int>(best);
    }
    return out;
}

double Problem::accuracy(const Vector& params, const Dataset& data) const {
    const std::vector<int> predicted = predict(params, data.features);
    if (predicted.empty()) return 0.0;
    std::size_t correct = 0;
    for (std::size_t r = 0; r < predicted.size(); ++r) {
        const int raw = data.labels[r];
        if (spec_.kind == ModelKind::LogisticBinary) {
            correct += predicted[r] == raw;
            continue;
        }
        const auto it = std::lower_bound(raw_classes_.begin(), raw_classes_.end(), raw);
        if (it != raw_classes_.end() && *it == raw) correct += predicted[r] == (it - raw_classes_.begin());
    }
    return static_cast<double>(correct) / static_cast<double>(predicted.size());
}

double Problem::training_accuracy(const Vector& params) const {
    std::size_t correct = 0;
    std::size_t total = 0;
    for (const Dataset& shard : shards_) {
        const std::vector<int> predicted = predict(params, shard.features);
        for (std::size_t r = 0; r < predicted.size(); ++r) correct += predicted[r] == shard.labels[r];
        total += predicted.size();
    }
    return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

Vector Problem::initial_params(Rng& rng) const {
    if (spec_.kind != ModelKind::Mlp1) return Vector::Zero(param_dim_);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector out(param_dim_);
    const double scale = 1.0 / std::sqrt(static_cast<double>(std::max(feature_dim_, spec_.hidden)));
    for (Eigen::Index j = 0; j < param_dim_; ++j) out[j] = scale * normal(rng);
    return out;
}

std::vector<int> sample_batch(int population, int batch, Rng& rng) {
    if (population < 1 || batch < 1) throw InvalidProblem("sample_batch needs population >= 1 and batch >= 1");
    if (batch >= population) {
        std::vector<int> all(static_cast<std::size_t>(population));
        std::iota(all.begin(), all.end(), 0);
        return all;
    }
    // Floyd's algorithm: each size-`batch` subset is equally likely.
    std::unordered_set<int> chosen;
    chosen.reserve(static_cast<std::size_t>(batch) * 2);
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(batch));
    for (int j = population - batch; j < population; ++j) {
        const int t = std::uniform_int_distribution<int>(0, j)(rng);
        const int pick = chosen.insert(t).second ? t : j;
        if (pick == j) chosen.insert(j);
        out.push_back(pick);
    }
    std::sort(out.begin(), out.end());
    return out;
}

double power_iteration_gram(const RowMatrix& a, int iterations, double tol) {
    if (a.rows() == 0 || a.cols() == 0) return 0.0;
    Vector v(a.cols());
    for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = 1.0 + 0.1 * static_cast<double>(j) / static_cast<double>(v.size());
    v.normalize();
    double estimate = 0.0;
    for (int it = 0; it < iterations; ++it) {
        Vector next = a.transpose() * (a * v);
        const double norm = next.norm();
        if (norm == 0.0) return 0.0;
        const double previous = estimate;
        estimate = v.dot(next);
        v = next / norm;
        if (it > 0 && std::abs(estimate - previous) <= tol * std::abs(estimate)) break;
    }
    return estimate;
}

}  // namespace depositum
