#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include "magjump/graph.hpp"
#include "magjump/magnetic_operator.hpp"
#include "magjump/one_forms.hpp"
#include "magjump/path_simulator.hpp"
#include "magjump/rng.hpp"
#include "magjump/stats.hpp"
#include "magjump/types.hpp"

namespace magjump {

// ============================================================================
// Monte Carlo semigroup estimation
//
// The magnetic heat semigroup has the stochastic representation
//   (e^{-tH^{a,v}} f)(x) = E_x[ e^{iS_t - V_t} f(Y_t) ],
// with S_t the line integral of a and V_t the occupation integral of v along
// the jump chain. The estimators below average that weight over independent
// paths and carry batch-means standard errors on the real and imaginary parts
// separately; z-scores against exact values take the componentwise maximum.
//
// Every estimate is keyed by (seed, stream scheme) and is bit-reproducible:
// path i for start vertex p uses stream p * num_paths + i, so results do not
// depend on evaluation order.
// ============================================================================

/// Complex sample weight e^{iS_t - V_t} of one path.
inline Complex fki_weight(const JumpPath& path, const OneForm& a, const Vector& v) {
    return std::exp(Complex{-potential_integral(path, v), stratonovich_integral(path, a)});
}

struct FkiPoint {
    Complex mean;
    Real stderr_mean; // sqrt(se_re^2 + se_im^2)
    std::size_t num_paths = 0;
};

struct SemigroupEstimate {
    ComplexVector means;  // per start vertex
    Vector stderr_re;     // batch-means spread of the real parts
    Vector stderr_im;     // batch-means spread of the imaginary parts
    std::size_t num_paths = 0; // per start vertex
    Real t = 0.0;
    std::uint64_t seed = 0;

    // Inputs the estimate was built from, kept so exact comparisons can
    // refuse mismatched operators.
    const WeightedGraph* graph = nullptr;
    ComplexVector a_values;
    Vector v;

    [[nodiscard]] Real stderr_at(Index p) const {
        return std::hypot(stderr_re[p], stderr_im[p]);
    }
};

namespace detail {

inline void check_fki_inputs(const WeightedGraph& g, const OneForm& a, const Vector& v,
                             const ComplexVector& f, Real t, std::size_t num_paths) {
    check_same_graph(&a.graph(), &g);
    require_real_form(a);
    check_size(g, v.size(), "fki v");
    check_size(g, f.size(), "fki f");
    if (!(t > 0.0)) throw std::invalid_argument("fki estimate needs t > 0");
    if (num_paths < 2) throw std::invalid_argument("fki estimate needs at least 2 paths");
}

struct FkiAccumulator {
    std::vector<Real> re;
    std::vector<Real> im;

    void reserve(std::size_t n) {
        re.reserve(n);
        im.reserve(n);
    }
    void clear() {
        re.clear();
        im.clear();
    }
    void add(Complex sample) {
        re.push_back(sample.real());
        im.push_back(sample.imag());
    }
};

/// Averages e^{iS - V} f(Y_t) over num_paths chain paths from x0, using
/// streams stream_base .. stream_base + num_paths - 1 of the given seed.
inline void fki_estimate_core(const ChainSampler& sampler, const OneForm& a, const Vector& v,
                              const ComplexVector& f, Index x0, Real t, std::size_t num_paths,
                              std::uint64_t seed, std::uint64_t stream_base, FkiAccumulator& acc,
                              JumpPath& scratch) {
    acc.clear();
    for (std::size_t i = 0; i < num_paths; ++i) {
        const std::uint64_t stream = stream_base + i;
        RngStream rng(seed, stream);
        sampler.sample_into(scratch, x0, t, rng, stream);
        acc.add(fki_weight(scratch, a, v) * f[scratch.final_state()]);
    }
}

} // namespace detail

/// Monte Carlo value of (e^{-tH^{a,v}} f)(x) with its standard error.
inline FkiPoint estimate(const WeightedGraph& g, const OneForm& a, const Vector& v,
                         const ComplexVector& f, Index x, Real t, std::size_t num_paths,
                         std::uint64_t seed) {
    detail::check_fki_inputs(g, a, v, f, t, num_paths);
    if (x < 0 || x >= g.num_vertices()) {
        throw std::invalid_argument("fki estimate: unknown start vertex index " + std::to_string(x));
    }
    const ChainSampler sampler(g);
    detail::FkiAccumulator acc;
    acc.reserve(num_paths);
    JumpPath scratch;
    detail::fki_estimate_core(sampler, a, v, f, x, t, num_paths, seed, 0, acc, scratch);
    const MeanEstimate re = batch_mean_estimate(acc.re);
    const MeanEstimate im = batch_mean_estimate(acc.im);
    return {Complex{re.mean, im.mean}, std::hypot(re.stderr_mean, im.stderr_mean), num_paths};
}

/// Per-vertex Monte Carlo semigroup: num_paths independent paths from every
/// start vertex, stream p * num_paths + i for path i from vertex p.
inline SemigroupEstimate estimate_vector(const WeightedGraph& g, const OneForm& a, const Vector& v,
                                         const ComplexVector& f, Real t,
                                         std::size_t num_paths_per_vertex, std::uint64_t seed) {
    detail::check_fki_inputs(g, a, v, f, t, num_paths_per_vertex);
    const Index n = g.num_vertices();
    SemigroupEstimate out;
    out.means.resize(n);
    out.stderr_re.resize(n);
    out.stderr_im.resize(n);
    out.num_paths = num_paths_per_vertex;
    out.t = t;
    out.seed = seed;
    out.graph = &g;
    out.a_values = a.values();
    out.v = v;

    const ChainSampler sampler(g);
    detail::FkiAccumulator acc;
    acc.reserve(num_paths_per_vertex);
    JumpPath scratch;
    for (Index p = 0; p < n; ++p) {
        const auto base = static_cast<std::uint64_t>(p) * num_paths_per_vertex;
        detail::fki_estimate_core(sampler, a, v, f, p, t, num_paths_per_vertex, seed, base, acc,
                                  scratch);
        const MeanEstimate re = batch_mean_estimate(acc.re);
        const MeanEstimate im = batch_mean_estimate(acc.im);
        out.means[p] = Complex{re.mean, im.mean};
        out.stderr_re[p] = re.stderr_mean;
        out.stderr_im[p] = im.stderr_mean;
    }
    return out;
}

/// Per-vertex z-scores of the Monte Carlo means against the exact semigroup
/// of the assembled operator; componentwise maximum over real and imaginary
/// parts. Refuses operators built from different data than the estimate.
inline Vector compare_exact(const SemigroupEstimate& est, const MagneticOperator& op,
                            const ComplexVector& f) {
    if (est.graph != &op.graph()) {
        throw std::invalid_argument("compare_exact: estimate and operator use different graphs");
    }
    const ComplexVector& a_op = op.vector_potential().values();
    const Vector& v_op = op.scalar_potential();
    const bool same_inputs = est.a_values.size() == a_op.size() && est.v.size() == v_op.size() &&
                             (est.a_values.array() == a_op.array()).all() &&
                             (est.v.array() == v_op.array()).all();
    if (!same_inputs) {
        throw std::invalid_argument("compare_exact: estimate and operator use different potentials");
    }
    detail::check_size(op.graph(), f.size(), "compare_exact f");
    const ComplexVector exact = semigroup_exact(op, est.t, f);
    const Index n = op.graph().num_vertices();
    Vector z(n);
    for (Index p = 0; p < n; ++p) {
        z[p] = std::max(z_score(est.means[p].real(), exact[p].real(), est.stderr_re[p]),
                        z_score(est.means[p].imag(), exact[p].imag(), est.stderr_im[p]));
    }
    return z;
}

// ============================================================================
// Self-adjointness via time reversal
// ============================================================================

struct SymmetryCheck {
    Complex lhs; // MC estimate of <e^{-tH} f, g>_mu
    Complex rhs; // MC estimate of <f, e^{-tH} g>_mu
    Real z;      // componentwise-max z-score of the paired difference
};

/// Pairs both sides of <P_t f, g>_mu = <f, P_t g>_mu on the same ensemble of
/// mu-started paths: lhs averages w f(Y_t) conj(g(Y_0)), rhs averages
/// conj(w) conj(g(Y_t)) f(Y_0). Time reversal exchanges the two samples, so
/// the expectations agree and the paired difference is a mean-zero statistic.
inline SymmetryCheck symmetry_test(const WeightedGraph& g, const OneForm& a, const Vector& v,
                                   const ComplexVector& f, const ComplexVector& h, Real t,
                                   std::size_t num_paths, std::uint64_t seed) {
    detail::check_fki_inputs(g, a, v, f, t, num_paths);
    detail::check_size(g, h.size(), "symmetry_test g");

    const ChainSampler sampler(g);
    const Real mass = sampler.total_mass();
    std::vector<Real> lhs_re(num_paths), lhs_im(num_paths);
    std::vector<Real> rhs_re(num_paths), rhs_im(num_paths);
    std::vector<Real> diff_re(num_paths), diff_im(num_paths);
    JumpPath path;
    for (std::size_t i = 0; i < num_paths; ++i) {
        RngStream rng(seed, i);
        const Index x0 = sampler.draw_start(rng);
        sampler.sample_into(path, x0, t, rng, i);
        const Complex w = fki_weight(path, a, v);
        const Index xt = path.final_state();
        const Complex lhs = mass * w * f[xt] * std::conj(h[x0]);
        const Complex rhs = mass * std::conj(w) * std::conj(h[xt]) * f[x0];
        lhs_re[i] = lhs.real();
        lhs_im[i] = lhs.imag();
        rhs_re[i] = rhs.real();
        rhs_im[i] = rhs.imag();
        diff_re[i] = lhs.real() - rhs.real();
        diff_im[i] = lhs.imag() - rhs.imag();
    }
    const MeanEstimate dre = batch_mean_estimate(diff_re);
    const MeanEstimate dim = batch_mean_estimate(diff_im);
    SymmetryCheck out;
    out.lhs = Complex{batch_mean_estimate(lhs_re).mean, batch_mean_estimate(lhs_im).mean};
    out.rhs = Complex{batch_mean_estimate(rhs_re).mean, batch_mean_estimate(rhs_im).mean};
    out.z = std::max(z_score(dre.mean, 0.0, dre.stderr_mean), z_score(dim.mean, 0.0, dim.stderr_mean));
    return out;
}

// ============================================================================
// Pathwise audits over ensembles
// ============================================================================

/// Worst case of |S_T(reversed path) + S_T| over an ensemble; the line
/// integral is odd under time reversal, so this should vanish to rounding.
inline Real antisymmetry_audit(const std::vector<JumpPath>& paths, const OneForm& a) {
    detail::require_real_form(a);
    Real worst = 0.0;
    for (const auto& path : paths) {
        const Real forward = stratonovich_integral(path, a);
        const Real backward = stratonovich_integral(reverse(path, path.horizon), a);
        worst = std::max(worst, std::abs(backward + forward));
    }
    return worst;
}

} // namespace magjump
