#include "depositum/partition.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include <fmt/format.h>

#include "depositum/errors.hpp"

namespace depositum {
namespace {

void check_sizes(std::size_t samples, int clients) {
    if (clients < 1) throw InvalidProblem(fmt::format("partition needs at least one client, got {}", clients));
    if (samples < static_cast<std::size_t>(clients)) {
        throw InvalidProblem(fmt::format("cannot give {} clients a sample each from {} samples", clients, samples));
    }
}

std::map<int, std::vector<int>> group_by_label(const std::vector<int>& labels) {
    std::map<int, std::vector<int>> groups;
    for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(static_cast<int>(i));
    return groups;
}

}  // namespace

Partition dirichlet_partition(const std::vector<int>& labels, int clients, double theta, Rng& rng) {
    check_sizes(labels.size(), clients);
    if (!(theta > 0.0)) throw InvalidProblem(fmt::format("Dirichlet concentration must be > 0, got {}", theta));

    Partition out;
    out.theta = theta;
    out.assignments.resize(static_cast<std::size_t>(clients));

    std::gamma_distribution<double> gamma(theta, 1.0);
    std::uniform_int_distribution<int> any_client(0, clients - 1);
    for (const auto& [label, members] : group_by_label(labels)) {
        std::vector<double> p(static_cast<std::size_t>(clients));
        for (double& v : p) v = gamma(rng);
        // Tiny theta can underflow every draw; the limit is a point mass.
        if (std::accumulate(p.begin(), p.end(), 0.0) <= 0.0) p[static_cast<std::size_t>(any_client(rng))] = 1.0;
        std::discrete_distribution<int> pick(p.begin(), p.end());
        for (int idx : members) out.assignments[static_cast<std::size_t>(pick(rng))].push_back(idx);
    }

    for (auto& shard : out.assignments) {
        if (!shard.empty()) continue;
        auto largest = std::max_element(out.assignments.begin(), out.assignments.end(),
                                        [](const auto& a, const auto& b) { return a.size() < b.size(); });
        shard.push_back(largest->back());
        largest->pop_back();
    }
    for (auto& shard : out.assignments) std::sort(shard.begin(), shard.end());
    return out;
}

Partition iid_partition(int samples, int clients, Rng& rng) {
    check_sizes(static_cast<std::size_t>(std::max(samples, 0)), clients);
    std::vector<int> order(static_cast<std::size_t>(samples));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    Partition out;
    out.assignments.resize(static_cast<std::size_t>(clients));
    for (std::size_t k = 0; k < order.size(); ++k) out.assignments[k % static_cast<std::size_t>(clients)].push_back(order[k]);
    for (auto& shard : out.assignments) std::sort(shard.begin(), shard.end());
    return out;
}

Eigen::MatrixXd class_proportions(const std::vector<int>& labels, const Partition& partition) {
    const auto groups = group_by_label(labels);
    std::map<int, Eigen::Index> row_of;
    for (const auto& [label, members] : groups) row_of.emplace(label, static_cast<Eigen::Index>(row_of.size()));

    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(groups.size()), partition.clients());
    for (int i = 0; i < partition.clients(); ++i) {
        for (int idx : partition.assignments[static_cast<std::size_t>(i)]) {
            counts(row_of.at(labels.at(static_cast<std::size_t>(idx))), i) += 1.0;
        }
    }
    for (const auto& [label, members] : groups) counts.row(row_of.at(label)) /= static_cast<double>(members.size());
    return counts;
}

}  // namespace depositum
