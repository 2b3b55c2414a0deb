#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "depositum/metrics.hpp"
#include "depositum/problem.hpp"
#include "depositum/regularizers.hpp"
#include "depositum/topology.hpp"

namespace depositum {

enum class Momentum { Polyak, Nesterov, None };

struct HyperParams {
    double alpha = 0.01;  // prox step
    double beta = 1.0;    // tracking step
    double gamma = 0.0;   // momentum coefficient in [0, 1)
    int period = 1;       // T0: gossip every T0 iterations
    int batch = 1;        // B, clamped to each shard size
    std::int64_t iterations = 0;
    Momentum momentum = Momentum::Polyak;

    /// Throws InvalidHyperParams (or StepTooLarge when alpha * rho >= 1).
    void validate(double rho) const;
};

/// Per-client variables stored as d x n column stacks.
struct SwarmState {
    Stacked x;
    Stacked y;
    Stacked nu;
    Stacked mu;  // only evolves under Nesterov momentum
    Stacked g;
    std::int64_t t = 0;

    int clients() const noexcept { return static_cast<int>(x.cols()); }
    int dim() const noexcept { return static_cast<int>(x.rows()); }
};

/// Every x_i = x0; y, nu, mu and g start at zero.
SwarmState init_state(int clients, const Vector& x0);

struct MomentumStep {
    Stacked nu;
    Stacked mu;
};

/// Momentum recursion fed by `source` (y for DEPOSITUM, g for the prox-DSGD baseline):
///   Polyak   nu+ = gamma nu + (1 - gamma) s
///   Nesterov mu+ = gamma mu + (1 - gamma) s,  nu+ = gamma mu+ + (1 - gamma) s
///   None     nu+ = s
/// Pure; mu is passed through unchanged unless Nesterov.
MomentumStep next_momentum(const Stacked& nu, const Stacked& mu, const Stacked& source, double gamma,
                           Momentum option);

/// Applies next_momentum to state.y, stores the new mu and returns nu^{t+1}
/// without writing it to state.nu.
Stacked momentum_update(SwarmState& state, double gamma, Momentum option);

enum class Algorithm { Depositum, ProxDsgd };

struct StepLog {
    std::int64_t t = 0;  // iteration that ran
    bool communicated = false;
};

/// One DEPOSITUM iteration t -> t+1 (adapt-then-combine):
///   nu^{t+1} from y^t; z_i = prox(alpha, x_i - alpha nu_i);
///   x^{t+1} = W^t z;  g^{t+1} = fresh batch gradients at x^{t+1};
///   y^{t+1} = W^t (y^t + beta g^{t+1} - beta g^t)
/// with W^t = W on communication rounds and the identity otherwise.
/// Client i's batch comes from rng_stream(seed, i, t + 1).
StepLog step(SwarmState& state, const HyperParams& hp, const Problem& problem, const Regularizer& h,
             const MixingMatrix& w, std::uint64_t seed, int threads = 1);

/// Ablation: momentum consumes g^t instead of y^t and y is never updated.
StepLog baseline_prox_dsgd_step(SwarmState& state, const HyperParams& hp, const Problem& problem,
                                const Regularizer& h, const MixingMatrix& w, std::uint64_t seed, int threads = 1);

struct RunOptions {
    std::int64_t eval_every = 1;
    Algorithm algorithm = Algorithm::Depositum;
    /// Shared starting point; defaults to Problem::initial_params from the seed.
    std::optional<Vector> x0;
    /// L used in the stationarity measure; defaults to Problem::estimate_L.
    std::optional<double> lipschitz;
    /// Accuracy of the averaged model is measured here; training shards when null.
    const Dataset* eval_data = nullptr;
    int threads = 1;
    /// Called after every step with the state at t+1 (tests, instrumentation).
    std::function<void(const SwarmState&, const StepLog&)> on_step;
};

struct Trace {
    std::string config_digest;
    std::uint64_t seed = 0;
    std::vector<MetricsRecord> records;
    std::int64_t communications = 0;
    double seconds = 0.0;
};

/// T = hp.iterations steps from a fresh state. Metrics are recorded at
/// t = 0, eval_every, 2 eval_every, ... < T and at t = T; each record pairs
/// x^t with the momentum average nu_bar^{t+1} that iteration t uses.
Trace run(const Problem& problem, const MixingMatrix& w, const HyperParams& hp, const Regularizer& h,
          std::uint64_t seed, const RunOptions& options = {});

/// Step size, momentum, batch and tracking step giving network-independent
/// linear speedup:
///   alpha = sqrt(n) / (24 L sqrt(T+1)),  1 - gamma = sqrt(n / (T+1)),  B = round(sqrt(n)),
///   beta^2 = 3200 d1 d2 / (c ((1584 d1 + 1077 T0) sqrt(T0 (T+1)) + 75 T0^2)),
/// with c = 1 for Polyak and omega(gamma) for Nesterov, (d1, d2) = delta_params(lambda, T0, alpha rho).
/// `iterations` is T. Throws BudgetTooSmall unless T+1 >= max(4n/9, 4 n rho^2 / L^2, T0, n).
HyperParams corollary1_params(int clients, double lipschitz, double rho, int period, std::int64_t iterations,
                              double lambda, Momentum momentum = Momentum::Polyak);

std::string to_string(Momentum m);
std::string to_string(Algorithm a);

}  // namespace depositum
