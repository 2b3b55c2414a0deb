#pragma once

#include <memory>

#include "depositum/dataset.hpp"
#include "depositum/partition.hpp"
#include "depositum/problem.hpp"
#include "depositum/rng.hpp"

namespace fixture {

/// Synthetic logistic data split over `clients`; theta <= 0 means IID.
inline std::unique_ptr<depositum::Problem> logistic(int clients, int samples, int dim, std::uint64_t seed,
                                                    double theta = 0.0, double separation = 1.5,
                                                    double noise = 0.0) {
    using namespace depositum;
    Rng rng = rng_stream(seed, 0, 0, stream::kData);
    const Dataset d = synth_logistic(dim, samples, separation, rng);
    Rng pr = rng_stream(seed, 0, 0, stream::kPartition);
    const Partition part = theta > 0.0 ? dirichlet_partition(d.labels, clients, theta, pr)
                                       : iid_partition(samples, clients, pr);
    return std::make_unique<Problem>(ModelSpec{ModelKind::LogisticBinary}, d, part, noise);
}

}  // namespace fixture
