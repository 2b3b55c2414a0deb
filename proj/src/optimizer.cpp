#include "depositum/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <fmt/format.h>

#include "depositum/errors.hpp"
#include "depositum/parallel.hpp"
#include "depositum/rng.hpp"

namespace depositum {
namespace {

void check_state(const SwarmState& state, const Problem& problem, const MixingMatrix& w) {
    if (state.clients() != problem.clients() || state.clients() != w.n()) {
        throw DimensionMismatch(fmt::format("state has {} clients, problem {}, mixing matrix {}", state.clients(),
                                            problem.clients(), w.n()));
    }
    if (state.dim() != problem.dim()) {
        throw DimensionMismatch(fmt::format("state dimension {} != problem dimension {}", state.dim(), problem.dim()));
    }
}

// Shared body of DEPOSITUM and the prox-DSGD ablation; `track` selects whether
// momentum reads y (and y is updated) or reads the raw local gradients g.
StepLog advance(SwarmState& state, const HyperParams& hp, const Problem& problem, const Regularizer& h,
                const MixingMatrix& w, std::uint64_t seed, int threads, bool track) {
    check_state(state, problem, w);
    h.check_step(hp.alpha);
    const int n = state.clients();

    MomentumStep m = next_momentum(state.nu, state.mu, track ? state.y : state.g, hp.gamma, hp.momentum);

    // Phase A: local prox step. Each client owns its column.
    Stacked z(state.x.rows(), n);
    parallel_for(n, threads, [&](int i) {
        z.col(i) = h.prox(hp.alpha, state.x.col(i) - hp.alpha * m.nu.col(i));
    });

    // Phase B: gossip on communication rounds only.
    const bool communicate = is_comm_round(state.t, hp.period);
    Stacked x_next = communicate ? mix(w, z) : std::move(z);

    Stacked g_next(state.g.rows(), n);
    parallel_for(n, threads, [&](int i) {
        Rng rng = rng_stream(seed, static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(state.t + 1), stream::kBatch);
        g_next.col(i) = problem.stochastic_grad(x_next.col(i), i, hp.batch, rng);
    });

    if (track) {
        Stacked y_next = state.y + hp.beta * (g_next - state.g);
        state.y = communicate ? mix(w, y_next) : std::move(y_next);
    }
    state.x = std::move(x_next);
    state.g = std::move(g_next);
    state.nu = std::move(m.nu);
    state.mu = std::move(m.mu);

    StepLog log{state.t, communicate};
    ++state.t;
    return log;
}

MetricsRecord evaluate(const SwarmState& state, const HyperParams& hp, const Problem& problem, const Regularizer& h,
                       double lipschitz, bool track, const Dataset* eval_data) {
    const MomentumStep m = next_momentum(state.nu, state.mu, track ? state.y : state.g, hp.gamma, hp.momentum);
    MetricsRecord rec = stationarity_measure(state.x, m.nu.rowwise().mean(), hp.alpha, lipschitz, problem, h);
    rec.t = state.t;
    rec.cons_y_sq = consensus_sq(state.y);
    rec.cons_nu_sq = consensus_sq(m.nu);

    const Vector x_bar = state.x.rowwise().mean();
    rec.accuracy = eval_data != nullptr ? problem.accuracy(x_bar, *eval_data) : problem.training_accuracy(x_bar);
    return rec;
}

}  // namespace

void HyperParams::validate(double rho) const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidHyperParams(fmt::format("alpha must be > 0, got {}", alpha));
    if (alpha * rho >= 1.0) {
        throw StepTooLarge(fmt::format("alpha * rho = {} must be < 1", alpha * rho));
    }
    if (!(beta > 0.0) || !std::isfinite(beta)) throw InvalidHyperParams(fmt::format("beta must be > 0, got {}", beta));
    if (!(gamma >= 0.0 && gamma < 1.0)) {
        throw InvalidHyperParams(fmt::format("momentum gamma must satisfy γ∈[0,1), got {}", gamma));
    }
    if (period < 1) throw InvalidHyperParams(fmt::format("communication period T0 must be >= 1, got {}", period));
    if (batch < 1) throw InvalidHyperParams(fmt::format("batch size B must be >= 1, got {}", batch));
    if (iterations < 0) throw InvalidHyperParams(fmt::format("iteration budget T must be >= 0, got {}", iterations));
}

SwarmState init_state(int clients, const Vector& x0) {
    if (clients < 1) throw InvalidHyperParams(fmt::format("need at least one client, got {}", clients));
    if (x0.size() < 1) throw InvalidHyperParams("parameter dimension must be >= 1");
    SwarmState s;
    s.x = x0.replicate(1, clients);
    s.y = Stacked::Zero(x0.size(), clients);
    s.nu = s.y;
    s.mu = s.y;
    s.g = s.y;
    return s;
}

MomentumStep next_momentum(const Stacked& nu, const Stacked& mu, const Stacked& source, double gamma,
                           Momentum option) {
    switch (option) {
        case Momentum::Polyak:
            return {gamma * nu + (1.0 - gamma) * source, mu};
        case Momentum::Nesterov: {
            Stacked mu_next = gamma * mu + (1.0 - gamma) * source;
            Stacked nu_next = gamma * mu_next + (1.0 - gamma) * source;
            return {std::move(nu_next), std::move(mu_next)};
        }
        case Momentum::None:
            return {source, mu};
    }
    throw InvalidHyperParams("unknown momentum option");
}

Stacked momentum_update(SwarmState& state, double gamma, Momentum option) {
    MomentumStep m = next_momentum(state.nu, state.mu, state.y, gamma, option);
    state.mu = std::move(m.mu);
    return std::move(m.nu);
}

StepLog step(SwarmState& state, const HyperParams& hp, const Problem& problem, const Regularizer& h,
             const MixingMatrix& w, std::uint64_t seed, int threads) {
    return advance(state, hp, problem, h, w, seed, threads, true);
}

StepLog baseline_prox_dsgd_step(SwarmState& state, const HyperParams& hp, const Problem& problem,
                                const Regularizer& h, const MixingMatrix& w, std::uint64_t seed, int threads) {
    return advance(state, hp, problem, h, w, seed, threads, false);
}

Trace run(const Problem& problem, const MixingMatrix& w, const HyperParams& hp, const Regularizer& h,
          std::uint64_t seed, const RunOptions& options) {
    const auto started = std::chrono::steady_clock::now();
    hp.validate(h.weak_modulus());
    if (options.eval_every < 1) throw InvalidHyperParams(fmt::format("eval_every must be >= 1, got {}", options.eval_every));

    Vector x0;
    if (options.x0) {
        x0 = *options.x0;
    } else {
        Rng rng = rng_stream(seed, 0, 0, stream::kInit);
        x0 = problem.initial_params(rng);
    }
    const double lipschitz = options.lipschitz ? *options.lipschitz : problem.estimate_L(seed);
    const bool track = options.algorithm == Algorithm::Depositum;

    SwarmState state = init_state(problem.clients(), x0);
    check_state(state, problem, w);

    Trace trace;
    trace.seed = seed;
    for (std::int64_t t = 0; t < hp.iterations; ++t) {
        if (t % options.eval_every == 0) {
            trace.records.push_back(evaluate(state, hp, problem, h, lipschitz, track, options.eval_data));
        }
        const StepLog log = advance(state, hp, problem, h, w, seed, options.threads, track);
        trace.communications += log.communicated ? 1 : 0;
        if (options.on_step) options.on_step(state, log);
    }
    trace.records.push_back(evaluate(state, hp, problem, h, lipschitz, track, options.eval_data));
    trace.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return trace;
}

HyperParams corollary1_params(int clients, double lipschitz, double rho, int period, std::int64_t iterations,
                              double lambda, Momentum momentum) {
    if (clients < 1) throw InvalidHyperParams(fmt::format("need at least one client, got {}", clients));
    if (!(lipschitz > 0.0)) throw InvalidHyperParams(fmt::format("L must be > 0, got {}", lipschitz));
    if (period < 1) throw InvalidHyperParams(fmt::format("T0 must be >= 1, got {}", period));
    const double n = clients;
    const double budget = static_cast<double>(iterations) + 1.0;
    const double required = std::max({4.0 * n / 9.0, 4.0 * n * rho * rho / (lipschitz * lipschitz),
                                      static_cast<double>(period), n});
    if (iterations < 0 || budget < required) {
        throw BudgetTooSmall(fmt::format("T+1 = {} is below max(4n/9, 4n rho^2/L^2, T0, n) = {}", budget, required));
    }

    HyperParams hp;
    hp.iterations = iterations;
    hp.period = period;
    hp.momentum = momentum;
    hp.alpha = std::sqrt(n) / (24.0 * lipschitz * std::sqrt(budget));
    hp.gamma = 1.0 - std::sqrt(n) / std::sqrt(budget);
    hp.batch = std::max(1, static_cast<int>(std::lround(std::sqrt(n))));

    const DeltaParams d = delta_params(lambda, period, hp.alpha * rho);
    const double t0 = period;
    const double scale = momentum == Momentum::Nesterov ? nesterov_omega(hp.gamma) : 1.0;
    const double denom = scale * ((1584.0 * d.delta1 + 1077.0 * t0) * std::sqrt(t0 * budget) + 75.0 * t0 * t0);
    hp.beta = std::sqrt(3200.0 * d.delta1 * d.delta2 / denom);
    return hp;
}

std::string to_string(Momentum m) {
    switch (m) {
        case Momentum::Polyak: return "polyak";
        case Momentum::Nesterov: return "nesterov";
        case Momentum::None: return "none";
    }
    return "?";
}

std::string to_string(Algorithm a) { return a == Algorithm::Depositum ? "depositum" : "prox_dsgd"; }

}  // namespace depositum
