#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

#include "magjump/graph.hpp"
#include "magjump/one_forms.hpp"
#include "magjump/types.hpp"

namespace magjump {

// ============================================================================
// Magnetic Schroedinger operator on a weighted graph
//
// Peierls coupling: (Hf)(p) = sum_q (f(p) - e^{i a(p,q)} f(q)) n(p,q) + v(p) f(p)
// with a real antisymmetric one-form a and real scalar potential v. H is
// self-adjoint in the mu-weighted inner product: H(p,q) mu(p) = conj(H(q,p)) mu(q).
// The associated quadratic form is the magnetic energy below.
// ============================================================================

/// Magnetic energy form
///   E^{a,v}(f,g) = sum_p sum_q b(p,q) (f(p) - e^{ia(p,q)} f(q)) conj(g(p) - e^{ia(p,q)} g(q))
///               + sum_p v(p) f(p) conj(g(p)) mu(p),
/// conjugate-symmetric, real on the diagonal, equal to the Dirichlet form at a=0, v=0.
inline Complex magnetic_energy(const WeightedGraph& g, const OneForm& a, const Vector& v,
                               const ComplexVector& f, const ComplexVector& h) {
    detail::check_size(g, v.size(), "magnetic_energy v");
    detail::check_size(g, f.size(), "magnetic_energy f");
    detail::check_size(g, h.size(), "magnetic_energy g");
    const Vector av = a.real_values();
    Complex acc{0.0, 0.0};
    const auto& edges = g.edges();
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const auto& ed = edges[e];
        if (ed.p == ed.q) continue;
        const Complex phase = std::polar(1.0, av[static_cast<Eigen::Index>(e)]);
        acc += ed.b * (f[ed.p] - phase * f[ed.q]) * std::conj(h[ed.p] - phase * h[ed.q]);
        const Complex back = std::conj(phase);
        acc += ed.b * (f[ed.q] - back * f[ed.p]) * std::conj(h[ed.q] - back * h[ed.p]);
    }
    for (Index p = 0; p < g.num_vertices(); ++p) acc += v[p] * f[p] * std::conj(h[p]) * g.mu(p);
    return acc;
}

/// Diagonal of the form: E^{a,v}(f) = E^{a,v}(f,f), evaluated as a real sum.
inline Real magnetic_energy(const WeightedGraph& g, const OneForm& a, const Vector& v,
                            const ComplexVector& f) {
    detail::check_size(g, v.size(), "magnetic_energy v");
    detail::check_size(g, f.size(), "magnetic_energy f");
    const Vector av = a.real_values();
    Real acc = 0.0;
    const auto& edges = g.edges();
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const auto& ed = edges[e];
        if (ed.p == ed.q) continue;
        const Complex phase = std::polar(1.0, av[static_cast<Eigen::Index>(e)]);
        acc += 2.0 * ed.b * std::norm(f[ed.p] - phase * f[ed.q]);
    }
    for (Index p = 0; p < g.num_vertices(); ++p) acc += v[p] * std::norm(f[p]) * g.mu(p);
    return acc;
}

class MagneticOperator {
public:
    MagneticOperator(const WeightedGraph& g, OneForm a, Vector v)
        : graph_(&g), a_(std::move(a)), v_(std::move(v)) {
        detail::check_size(g, v_.size(), "magnetic operator v");
        detail::check_same_graph(&a_.graph(), &g);
        const Vector av = a_.real_values(); // rejects non-real potentials
        const Index n = g.num_vertices();
        v_minus_sup_ = 0.0;
        for (Index p = 0; p < n; ++p) v_minus_sup_ = std::max(v_minus_sup_, -v_[p]);

        h_ = ComplexMatrix::Zero(n, n);
        const auto& edges = g.edges();
        for (Index p = 0; p < n; ++p) {
            Real r = 0.0;
            for (const auto& arc : g.arcs(p)) {
                const auto& ed = edges[arc.edge];
                const Real npq = 2.0 * ed.b / g.mu(p);
                const Real phase = ed.p == p ? av[arc.edge] : -av[arc.edge];
                h_(p, arc.to) -= std::polar(npq, phase);
                r += npq;
            }
            h_(p, p) = Complex{r + v_[p], 0.0};
        }

        // Similarity by diag(sqrt(mu)) turns mu-Hermitian into Hermitian.
        Vector sqrt_mu(n);
        for (Index p = 0; p < n; ++p) sqrt_mu[p] = std::sqrt(g.mu(p));
        ComplexMatrix sym(n, n);
        for (Index p = 0; p < n; ++p) {
            for (Index q = 0; q < n; ++q) sym(p, q) = h_(p, q) * (sqrt_mu[p] / sqrt_mu[q]);
        }
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(sym);
        if (solver.info() != Eigen::Success) {
            throw std::runtime_error("magnetic operator eigendecomposition did not converge");
        }
        eigenvalues_ = solver.eigenvalues(); // ascending
        eigenvectors_ = solver.eigenvectors();
        for (Index p = 0; p < n; ++p) eigenvectors_.row(p) /= sqrt_mu[p]; // mu-orthonormal columns
    }

    [[nodiscard]] const WeightedGraph& graph() const { return *graph_; }
    [[nodiscard]] const OneForm& vector_potential() const { return a_; }
    [[nodiscard]] const Vector& scalar_potential() const { return v_; }

    /// sup of the negative part of v; enters the semigroup growth bound e^{t sup v_-}.
    [[nodiscard]] Real negative_part_bound() const { return v_minus_sup_; }

    [[nodiscard]] const ComplexMatrix& matrix() const { return h_; }
    [[nodiscard]] const Vector& eigenvalues() const { return eigenvalues_; }
    [[nodiscard]] const ComplexMatrix& eigenvectors() const { return eigenvectors_; }

    [[nodiscard]] ComplexVector apply(const ComplexVector& f) const {
        detail::check_size(*graph_, f.size(), "apply f");
        return h_ * f;
    }

    /// mu-weighted inner product <x,y>_mu on the operator's graph.
    [[nodiscard]] Complex mu_inner(const ComplexVector& x, const ComplexVector& y) const {
        Complex acc{0.0, 0.0};
        for (Index p = 0; p < graph_->num_vertices(); ++p) {
            acc += x[p] * std::conj(y[p]) * graph_->mu(p);
        }
        return acc;
    }

private:
    const WeightedGraph* graph_;
    OneForm a_;
    Vector v_;
    Real v_minus_sup_ = 0.0;
    ComplexMatrix h_;
    Vector eigenvalues_;
    ComplexMatrix eigenvectors_;
};

inline MagneticOperator assemble(const WeightedGraph& g, OneForm a, Vector v) {
    return MagneticOperator(g, std::move(a), std::move(v));
}

/// Free operator -L as the a=0, v=0 case.
inline MagneticOperator assemble_free(const WeightedGraph& g) {
    return MagneticOperator(g, OneForm(g), Vector::Zero(g.num_vertices()));
}

// ============================================================================
// Checks and derived quantities
// ============================================================================

struct FormAgreement {
    Complex lhs; // <Hf,g>_mu
    Complex rhs; // E^{a,v}(f,g)
    Real gap;
};

/// The operator and the energy form describe the same object: <Hf,g>_mu = E^{a,v}(f,g).
inline FormAgreement quadratic_form_check(const MagneticOperator& op, const ComplexVector& f,
                                          const ComplexVector& g) {
    FormAgreement out;
    out.lhs = op.mu_inner(op.apply(f), g);
    out.rhs = magnetic_energy(op.graph(), op.vector_potential(), op.scalar_potential(), f, g);
    out.gap = std::abs(out.lhs - out.rhs);
    return out;
}

/// e^{-tH} f through the cached spectral decomposition.
inline ComplexVector semigroup_exact(const MagneticOperator& op, Real t, const ComplexVector& f) {
    if (t < 0.0) throw std::invalid_argument("semigroup time must be nonnegative");
    detail::check_size(op.graph(), f.size(), "semigroup f");
    const auto& g = op.graph();
    const Index n = g.num_vertices();
    ComplexVector weighted(n);
    for (Index p = 0; p < n; ++p) weighted[p] = f[p] * g.mu(p);
    ComplexVector coeff = op.eigenvectors().adjoint() * weighted;
    for (Index k = 0; k < n; ++k) coeff[k] *= std::exp(-t * op.eigenvalues()[k]);
    return op.eigenvectors() * coeff;
}

/// Full propagator e^{-tH} as a matrix (columns are e^{-tH} applied to basis vectors).
inline ComplexMatrix semigroup_matrix(const MagneticOperator& op, Real t) {
    if (t < 0.0) throw std::invalid_argument("semigroup time must be nonnegative");
    const auto& g = op.graph();
    const Index n = g.num_vertices();
    ComplexMatrix scaled = op.eigenvectors();
    for (Index k = 0; k < n; ++k) scaled.col(k) *= std::exp(-t * op.eigenvalues()[k]);
    ComplexMatrix out = scaled * op.eigenvectors().adjoint();
    for (Index q = 0; q < n; ++q) out.col(q) *= g.mu(q);
    return out;
}

/// Eigenvalues in ascending order.
inline Vector spectrum(const MagneticOperator& op) { return op.eigenvalues(); }

/// Same operator in the gauge a + du; unitarily equivalent via U = diag(e^{iu}).
inline MagneticOperator gauge_shift(const MagneticOperator& op, const Vector& u) {
    detail::check_size(op.graph(), u.size(), "gauge u");
    return MagneticOperator(op.graph(), op.vector_potential() + exact_form(op.graph(), u),
                            op.scalar_potential());
}

/// Largest violation of |e^{-tH^{a,v}} f| <= e^{-tH^{0,v}} |f| over vertices;
/// nonpositive up to rounding for every input.
inline Real diamagnetic_check(const MagneticOperator& op, const ComplexVector& f, Real t) {
    const auto& g = op.graph();
    MagneticOperator free_op(g, OneForm(g), op.scalar_potential());
    ComplexVector abs_f(f.size());
    for (Eigen::Index p = 0; p < f.size(); ++p) abs_f[p] = Complex{std::abs(f[p]), 0.0};
    const ComplexVector magnetic = semigroup_exact(op, t, f);
    const ComplexVector dominating = semigroup_exact(free_op, t, abs_f);
    Real worst = -std::numeric_limits<Real>::infinity();
    for (Eigen::Index p = 0; p < f.size(); ++p) {
        worst = std::max(worst, std::abs(magnetic[p]) - dominating[p].real());
    }
    return worst;
}

struct EnergyDomination {
    Real lhs; // E(|f|)
    Real rhs; // E^{a,0}(f)
    bool holds;
};

/// Energy form of the modulus is dominated by the magnetic energy: E(|f|) <= E^{a,0}(f).
inline EnergyDomination energy_diamag_check(const WeightedGraph& g, const OneForm& a,
                                            const ComplexVector& f) {
    EnergyDomination out{};
    ComplexVector abs_f(f.size());
    for (Eigen::Index p = 0; p < f.size(); ++p) abs_f[p] = Complex{std::abs(f[p]), 0.0};
    out.lhs = dirichlet_energy(g, abs_f);
    out.rhs = magnetic_energy(g, a, Vector::Zero(g.num_vertices()), f);
    out.holds = out.lhs <= out.rhs + 1e-12 * out.rhs;
    return out;
}

struct EnergyBound {
    Real lhs; // E^{a,0}(f)
    Real rhs; // 4 E(f) + 4 sup|f|^2 ||a||^2
    bool holds;
};

/// Magnetic energy is controlled by the free energy plus the form norm of a:
/// E^{a,0}(f) <= 4 E(f) + 4 sup|f|^2 ||a||^2.
inline EnergyBound energy_bound_check(const WeightedGraph& g, const OneForm& a,
                                      const ComplexVector& f) {
    EnergyBound out{};
    out.lhs = magnetic_energy(g, a, Vector::Zero(g.num_vertices()), f);
    Real fmax = 0.0;
    for (Eigen::Index p = 0; p < f.size(); ++p) fmax = std::max(fmax, std::abs(f[p]));
    out.rhs = 4.0 * dirichlet_energy(g, f) + 4.0 * fmax * fmax * form_norm_squared(a);
    out.holds = out.lhs <= out.rhs + 1e-12 * out.rhs;
    return out;
}

/// Finite-time difference quotient of the free semigroup against the magnetic
/// coupling: (1/t) sum_q (f(p) - e^{ia(p,q)} f(q)) [e^{tL}]_{pq} + v(p) f(p),
/// with a extended by zero off the edge set. Converges to Hf with error O(t).
inline ComplexVector generator_quotient(const WeightedGraph& g, const OneForm& a, const Vector& v,
                                        const ComplexVector& f, Real t) {
    if (!(t > 0.0)) throw std::invalid_argument("generator quotient needs t > 0");
    detail::check_size(g, v.size(), "generator_quotient v");
    detail::check_size(g, f.size(), "generator_quotient f");
    const Vector av = a.real_values();
    const Index n = g.num_vertices();

    ComplexMatrix phase = ComplexMatrix::Constant(n, n, Complex{1.0, 0.0});
    const auto& edges = g.edges();
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const auto& ed = edges[e];
        if (ed.p == ed.q) continue;
        phase(ed.p, ed.q) = std::polar(1.0, av[static_cast<Eigen::Index>(e)]);
        phase(ed.q, ed.p) = std::polar(1.0, -av[static_cast<Eigen::Index>(e)]);
    }

    const ComplexMatrix transition = semigroup_matrix(assemble_free(g), t); // e^{tL}
    ComplexVector out(n);
    for (Index p = 0; p < n; ++p) {
        Complex acc{0.0, 0.0};
        for (Index q = 0; q < n; ++q) acc += (f[p] - phase(p, q) * f[q]) * transition(p, q);
        out[p] = acc / t + v[p] * f[p];
    }
    return out;
}

} // namespace magjump
