#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "magjump/graph.hpp"
#include "magjump/one_forms.hpp"
#include "magjump/rng.hpp"
#include "magjump/stats.hpp"
#include "magjump/types.hpp"

namespace magjump {

// ============================================================================
// Continuous-time jump chain and pathwise calculus
//
// The chain associated with (E, mu) holds at p for an Exp(rate(p)) time with
// rate(p) = sum_q n(p,q), then jumps to q with probability n(p,q)/rate(p).
// Paths are cadlag step functions recorded as (time, target) events. Every
// path functional below is evaluated exactly from the event list; Monte Carlo
// enters only through expectations over many paths.
//
// Line-integral orientation: a jump from p to q contributes a(p,q), and the
// compensator is + integral of (del* a)(Y_s) ds, so S = M + Lambda with M the
// martingale part. Under this pairing the sampled Feynman-Kac weights
// e^{iS - V} average to the semigroup of -H^{a,v} (see fki_estimator).
// ============================================================================

struct JumpEvent {
    Real time;
    Index target;
};

struct JumpPath {
    Index start = 0;
    std::vector<JumpEvent> events; // strictly increasing times in (0, horizon]
    Real horizon = 0.0;
    std::uint64_t stream_id = 0;

    /// State at time t (cadlag: an event at exactly t has already happened).
    [[nodiscard]] Index state_at(Real t) const {
        Index state = start;
        for (const auto& e : events) {
            if (e.time > t) break;
            state = e.target;
        }
        return state;
    }

    [[nodiscard]] Index final_state() const { return events.empty() ? start : events.back().target; }
};

/// Structural invariants of a recorded path.
inline std::vector<std::string> validate_path(const JumpPath& path, const WeightedGraph& g) {
    std::vector<std::string> out;
    if (!(path.horizon >= 0.0)) out.emplace_back("negative horizon");
    if (path.start < 0 || path.start >= g.num_vertices()) out.emplace_back("start vertex out of range");
    Real prev_time = 0.0;
    Index prev_state = path.start;
    for (std::size_t k = 0; k < path.events.size(); ++k) {
        const auto& e = path.events[k];
        const std::string tag = " at event " + std::to_string(k);
        if (!(e.time > prev_time)) out.push_back("event times not strictly increasing" + tag);
        if (e.time > path.horizon) out.push_back("event beyond horizon" + tag);
        if (e.target < 0 || e.target >= g.num_vertices()) out.push_back("target out of range" + tag);
        else if (e.target == prev_state) out.push_back("self-jump" + tag);
        prev_time = e.time;
        prev_state = e.target;
    }
    return out;
}

// ============================================================================
// Simulation
// ============================================================================

/// Precomputed jump tables for one graph; reusable across many paths.
class ChainSampler {
public:
    explicit ChainSampler(const WeightedGraph& g) : graph_(&g) {
        const Index n = g.num_vertices();
        rates_.resize(n);
        targets_.resize(n);
        cumulative_.resize(n);
        for (Index p = 0; p < n; ++p) {
            Real acc = 0.0;
            for (const auto& arc : g.arcs(p)) {
                const Real npq = 2.0 * g.edges()[arc.edge].b / g.mu(p);
                if (npq <= 0.0) continue;
                acc += npq;
                targets_[p].push_back(arc.to);
                cumulative_[p].push_back(acc);
            }
            rates_[p] = acc;
        }
        mu_cumulative_.resize(n);
        Real mass = 0.0;
        for (Index p = 0; p < n; ++p) {
            mass += g.mu(p);
            mu_cumulative_[p] = mass;
        }
        total_mass_ = mass;
    }

    [[nodiscard]] const WeightedGraph& graph() const { return *graph_; }
    [[nodiscard]] Real rate(Index p) const { return rates_[static_cast<std::size_t>(p)]; }
    [[nodiscard]] Real total_mass() const { return total_mass_; }

    /// One chain path from x0 over [0, horizon]. An event landing exactly on
    /// the horizon is kept; rate-zero states absorb.
    void sample_into(JumpPath& path, Index x0, Real horizon, RngStream& rng,
                     std::uint64_t stream_id) const {
        path.start = x0;
        path.events.clear();
        path.horizon = horizon;
        path.stream_id = stream_id;
        Index state = x0;
        Real t = 0.0;
        while (true) {
            const Real r = rates_[static_cast<std::size_t>(state)];
            if (r <= 0.0) break;
            t += rng.next_exponential(r);
            if (t > horizon) break;
            state = pick_target(state, rng.next_unit() * r);
            path.events.push_back({t, state});
        }
    }

    [[nodiscard]] JumpPath sample(Index x0, Real horizon, std::uint64_t seed,
                                  std::uint64_t stream_id) const {
        RngStream rng(seed, stream_id);
        JumpPath path;
        sample_into(path, x0, horizon, rng, stream_id);
        return path;
    }

    /// Start vertex distributed as mu / mu(X), consuming one draw.
    [[nodiscard]] Index draw_start(RngStream& rng) const {
        const Real u = rng.next_unit() * total_mass_;
        const auto it = std::upper_bound(mu_cumulative_.begin(), mu_cumulative_.end(), u);
        const auto k = static_cast<Index>(it - mu_cumulative_.begin());
        return std::min(k, static_cast<Index>(mu_cumulative_.size() - 1));
    }

private:
    [[nodiscard]] Index pick_target(Index state, Real u) const {
        const auto& cum = cumulative_[static_cast<std::size_t>(state)];
        const auto it = std::upper_bound(cum.begin(), cum.end(), u);
        const auto k = static_cast<std::size_t>(it - cum.begin());
        return targets_[static_cast<std::size_t>(state)][std::min(k, cum.size() - 1)];
    }

    const WeightedGraph* graph_;
    std::vector<Real> rates_;
    std::vector<std::vector<Index>> targets_;
    std::vector<std::vector<Real>> cumulative_;
    std::vector<Real> mu_cumulative_;
    Real total_mass_ = 0.0;
};

/// Paths are keyed by (seed, stream_id): the same pair reproduces the same
/// path bit for bit, independent of any surrounding parallelism.
inline JumpPath simulate(const WeightedGraph& g, Index x0, Real horizon, std::uint64_t seed,
                         std::uint64_t stream_id) {
    if (x0 < 0 || x0 >= g.num_vertices()) {
        throw std::invalid_argument("simulate: unknown start vertex index " + std::to_string(x0));
    }
    if (!(horizon > 0.0)) throw std::invalid_argument("simulate: horizon must be positive");
    return ChainSampler(g).sample(x0, horizon, seed, stream_id);
}

// ============================================================================
// Path functionals
// ============================================================================

namespace detail {

inline void require_real_form(const OneForm& a) {
    if (!a.is_real()) throw std::invalid_argument("path functionals need a real one-form");
}

/// (Lf)(p) = sum_q n(p,q)(f(q) - f(p)), assembled from the adjacency lists.
inline ComplexVector apply_generator(const WeightedGraph& g, const ComplexVector& f) {
    const Index n = g.num_vertices();
    ComplexVector lf = ComplexVector::Zero(n);
    for (Index p = 0; p < n; ++p) {
        Complex acc{0.0, 0.0};
        for (const auto& arc : g.arcs(p)) {
            acc += (f[arc.to] - f[p]) * (2.0 * g.edges()[arc.edge].b / g.mu(p));
        }
        lf[p] = acc;
    }
    return lf;
}

/// Integral over [0, end] of w(Y_s) ds for piecewise-constant paths.
template <typename Value>
inline Value occupation_integral(const JumpPath& path, const Eigen::Matrix<Value, Eigen::Dynamic, 1>& w,
                                 Real end) {
    Value acc{};
    Real t0 = 0.0;
    Index state = path.start;
    for (const auto& e : path.events) {
        if (e.time > end) break;
        acc += w[state] * (e.time - t0);
        t0 = e.time;
        state = e.target;
    }
    acc += w[state] * (end - t0);
    return acc;
}

} // namespace detail

/// Line integral S_T = sum over jumps of a(Y_{s-}, Y_s); piecewise constant,
/// jumping exactly at path events.
inline Real stratonovich_integral(const JumpPath& path, const OneForm& a) {
    detail::require_real_form(a);
    Real acc = 0.0;
    Index state = path.start;
    for (const auto& e : path.events) {
        acc += a(state, e.target).real();
        state = e.target;
    }
    return acc;
}

/// S_t at each requested time.
inline Vector stratonovich_integral(const JumpPath& path, const OneForm& a, const Vector& times) {
    detail::require_real_form(a);
    Vector out(times.size());
    for (Eigen::Index i = 0; i < times.size(); ++i) {
        Real acc = 0.0;
        Index state = path.start;
        for (const auto& e : path.events) {
            if (e.time > times[i]) break;
            acc += a(state, e.target).real();
            state = e.target;
        }
        out[i] = acc;
    }
    return out;
}

/// V_T = integral of v(Y_s) ds, evaluated exactly over holding intervals.
inline Real potential_integral(const JumpPath& path, const Vector& v) {
    const auto covers = [&](Index p) { return p >= 0 && p < static_cast<Index>(v.size()); };
    bool ok = covers(path.start);
    for (const auto& e : path.events) ok = ok && covers(e.target);
    if (!ok) throw std::invalid_argument("potential_integral: potential does not cover the path states");
    return detail::occupation_integral<Real>(path, v, path.horizon);
}

/// Lambda_T = integral of (del* a)(Y_s) ds; computed from the occupation times
/// directly, never as a difference of sampled quantities.
inline Real divergence_part(const JumpPath& path, const OneForm& a) {
    detail::require_real_form(a);
    const Vector div = divergence(a).real();
    return detail::occupation_integral<Real>(path, div, path.horizon);
}

/// M_T = S_T - Lambda_T, the martingale part of the line integral.
inline Real martingale_part(const JumpPath& path, const OneForm& a) {
    return stratonovich_integral(path, a) - divergence_part(path, a);
}

/// Thresholded evaluation of the line integral: jump terms above epsilon plus
/// the compensator of the sub-threshold increments,
///   sum_{|a|>eps} a(Y_{s-},Y_s) + int_0^T sum_{q: |a(Y_s,q)|<=eps} a(Y_s,q) n(Y_s,q) ds.
/// Exact once eps is below the smallest nonzero |a|; pure compensator once
/// eps exceeds max |a|.
inline Real compensated_integral(const JumpPath& path, const OneForm& a, Real eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("compensated integral needs eps > 0");
    detail::require_real_form(a);
    const auto& g = a.graph();

    Real jump_sum = 0.0;
    Index state = path.start;
    for (const auto& e : path.events) {
        const Real inc = a(state, e.target).real();
        if (std::abs(inc) > eps) jump_sum += inc;
        state = e.target;
    }

    Vector small_divergence = Vector::Zero(g.num_vertices());
    for (Index p = 0; p < g.num_vertices(); ++p) {
        Real acc = 0.0;
        for (const auto& arc : g.arcs(p)) {
            const Real value = a(p, arc.to).real();
            if (std::abs(value) <= eps) acc += value * (2.0 * g.edges()[arc.edge].b / g.mu(p));
        }
        small_divergence[p] = acc;
    }
    return jump_sum + detail::occupation_integral<Real>(path, small_divergence, path.horizon);
}

// ============================================================================
// Time reversal
// ============================================================================

/// Reversal over [0, t]: the reversed path starts at Y_t, every jump p -> q
/// becomes q -> p at time t - s. Involutive on event sets. Pathwise:
/// S(rev) = -S, Lambda(rev) = Lambda, M(rev) = -M - 2 Lambda.
inline JumpPath reverse(const JumpPath& path, Real t) {
    if (t > path.horizon) throw std::invalid_argument("reverse: time beyond the path horizon");
    if (t < 0.0) throw std::invalid_argument("reverse: negative time");
    JumpPath out;
    out.horizon = t;
    out.stream_id = path.stream_id;
    out.start = path.state_at(t);
    std::vector<Index> sources;
    std::vector<Real> times;
    Index state = path.start;
    for (const auto& e : path.events) {
        if (e.time >= t) break; // an event at exactly t has no reversed image
        sources.push_back(state);
        times.push_back(e.time);
        state = e.target;
    }
    for (std::size_t k = sources.size(); k-- > 0;) {
        out.events.push_back({t - times[k], sources[k]});
    }
    return out;
}

/// Split at a non-event time s: the prefix on [0,s] and the time-shifted
/// remainder on [0, T-s]. Every path functional is additive across the split.
inline std::pair<JumpPath, JumpPath> split_at(const JumpPath& path, Real s) {
    if (!(s > 0.0) || !(s < path.horizon)) {
        throw std::invalid_argument("split point must lie strictly inside (0, horizon)");
    }
    JumpPath first, second;
    first.start = path.start;
    first.horizon = s;
    first.stream_id = path.stream_id;
    second.start = path.state_at(s);
    second.horizon = path.horizon - s;
    second.stream_id = path.stream_id;
    for (const auto& e : path.events) {
        if (e.time == s) throw std::invalid_argument("split point collides with an event time");
        if (e.time < s) first.events.push_back(e);
        else second.events.push_back({e.time - s, e.target});
    }
    return {std::move(first), std::move(second)};
}

// ============================================================================
// Fukushima decomposition
// ============================================================================

struct FukushimaParts {
    Complex total_change; // A_T = f(Y_T) - f(Y_0)
    Complex martingale;   // M_T = A_T - N_T
    Complex compensator;  // N_T = integral of (Lf)(Y_s) ds
};

/// Pathwise split f(Y_T) - f(Y_0) = M_T + N_T with continuous N. Exact by
/// construction; the statistics live in E_x[M_T] = 0 and the energy identity.
inline FukushimaParts fukushima(const JumpPath& path, const ComplexVector& f,
                                const WeightedGraph& g) {
    detail::check_size(g, f.size(), "fukushima f");
    const ComplexVector lf = detail::apply_generator(g, f);
    FukushimaParts out;
    out.total_change = f[path.final_state()] - f[path.start];
    out.compensator = detail::occupation_integral<Complex>(path, lf, path.horizon);
    out.martingale = out.total_change - out.compensator;
    return out;
}

/// Audits that M inherits each jump of f(Y) exactly: at every event the
/// difference quotient of A - N across the event equals f(target) - f(source).
inline Real jump_consistency_check(const JumpPath& path, const ComplexVector& f,
                                   const WeightedGraph& g) {
    detail::check_size(g, f.size(), "jump_consistency f");
    const ComplexVector lf = detail::apply_generator(g, f);
    Real worst = 0.0;
    Real t0 = 0.0;
    Index state = path.start;
    Complex occupation{0.0, 0.0};
    for (const auto& e : path.events) {
        occupation += lf[state] * (e.time - t0);
        const Complex m_before = (f[state] - f[path.start]) - occupation;
        const Complex m_after = (f[e.target] - f[path.start]) - occupation;
        const Complex expected = f[e.target] - f[state];
        worst = std::max(worst, std::abs((m_after - m_before) - expected));
        t0 = e.time;
        state = e.target;
    }
    return worst;
}

// ============================================================================
// Levy system check
// ============================================================================

struct LevyCheck {
    Real mc;     // Monte Carlo estimate of E_mu[sum over jumps of phi]
    Real exact;  // T sum_p mu(p) sum_q phi(p,q) n(p,q)
    Real stderr_mc;
    Real z;
};

/// Expected jump sums against the stationary jump intensity: paths start in
/// the (unnormalized) measure mu, so sample means are scaled by the total mass.
inline LevyCheck levy_system_estimate(const WeightedGraph& g, const EdgeFunction& phi, Real horizon,
                                      std::size_t num_paths, std::uint64_t seed) {
    detail::check_same_graph(&phi.graph(), &g);
    if (!(horizon > 0.0)) throw std::invalid_argument("levy check: horizon must be positive");
    if (num_paths < 2) throw std::invalid_argument("levy check: need at least 2 paths");
    for (Eigen::Index s = 0; s < phi.values().size(); ++s) {
        const Complex value = phi.values()[s];
        if (value.imag() != 0.0 || value.real() < 0.0) {
            throw std::invalid_argument("levy check: phi must be nonnegative");
        }
    }

    Real exact = 0.0;
    const auto& edges = g.edges();
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const auto ei = static_cast<Eigen::Index>(e);
        if (edges[e].p == edges[e].q) continue;
        exact += 2.0 * edges[e].b *
                 (phi.values()[2 * ei].real() + phi.values()[2 * ei + 1].real());
    }
    exact *= horizon;

    ChainSampler sampler(g);
    const Real mass = sampler.total_mass();
    std::vector<Real> samples(num_paths);
    JumpPath path;
    for (std::size_t i = 0; i < num_paths; ++i) {
        RngStream rng(seed, i);
        const Index x0 = sampler.draw_start(rng);
        sampler.sample_into(path, x0, horizon, rng, i);
        Real acc = 0.0;
        Index state = path.start;
        for (const auto& e : path.events) {
            acc += phi(state, e.target).real();
            state = e.target;
        }
        samples[i] = mass * acc;
    }
    const MeanEstimate stats = batch_mean_estimate(samples);
    return {stats.mean, exact, stats.stderr_mean, z_score(stats.mean, exact, stats.stderr_mean)};
}

} // namespace magjump
