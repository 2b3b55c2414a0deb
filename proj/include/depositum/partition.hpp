#pragma once

#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "depositum/rng.hpp"

namespace depositum {

/// Disjoint per-client index lists into a pooled dataset.
struct Partition {
    std::vector<std::vector<int>> assignments;
    /// Dirichlet concentration, or +infinity for an IID split.
    double theta = std::numeric_limits<double>::infinity();

    int clients() const noexcept { return static_cast<int>(assignments.size()); }
    bool iid() const noexcept { return theta == std::numeric_limits<double>::infinity(); }
};

/// Label-skewed split: for every class draw p ~ Dir(theta * 1_n) and send each
/// sample of that class to client i with probability p_i. Empty clients are
/// repaired by moving one sample from the currently largest client.
/// Throws InvalidProblem when there are fewer samples than clients.
Partition dirichlet_partition(const std::vector<int>& labels, int clients, double theta, Rng& rng);

/// Shuffle and deal samples round-robin so shard sizes differ by at most one.
Partition iid_partition(int samples, int clients, Rng& rng);

/// proportions(c, i): fraction of class c's samples held by client i (rows sum to 1).
/// Classes are ordered as the sorted distinct labels.
Eigen::MatrixXd class_proportions(const std::vector<int>& labels, const Partition& partition);

}  // namespace depositum
