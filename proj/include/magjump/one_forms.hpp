#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

#include "magjump/graph.hpp"
#include "magjump/types.hpp"

namespace magjump {

// ============================================================================
// Functions on directed edges and antisymmetric one-forms
//
// An EdgeFunction assigns an independent complex value to each orientation of
// each edge. A OneForm stores one value per unordered pair against the p < q
// orientation; the reverse orientation is the negation, so antisymmetry holds
// by construction. All form inner products are weighted by b over ordered
// pairs: <w1,w2> = sum_p sum_q w1(p,q) conj(w2(p,q)) b(p,q).
// ============================================================================

namespace detail {

inline void check_same_graph(const WeightedGraph* a, const WeightedGraph* b) {
    if (a != b) throw std::invalid_argument("forms are bound to different graphs");
}

} // namespace detail

class EdgeFunction {
public:
    explicit EdgeFunction(const WeightedGraph& g)
        : graph_(&g), vals_(ComplexVector::Zero(2 * static_cast<Eigen::Index>(g.num_edges()))) {}

    [[nodiscard]] const WeightedGraph& graph() const { return *graph_; }

    [[nodiscard]] Complex operator()(Index p, Index q) const { return vals_[slot(p, q)]; }

    void set(Index p, Index q, Complex value) { vals_[slot(p, q)] = value; }

    /// Raw storage: [2e] holds value(p_e,q_e), [2e+1] holds value(q_e,p_e).
    [[nodiscard]] const ComplexVector& values() const { return vals_; }
    [[nodiscard]] ComplexVector& values() { return vals_; }

private:
    [[nodiscard]] Eigen::Index slot(Index p, Index q) const {
        const auto& edges = graph_->edges();
        for (const auto& a : graph_->arcs(p)) {
            if (a.to == q) return 2 * static_cast<Eigen::Index>(a.edge) + (edges[a.edge].p == p ? 0 : 1);
        }
        throw std::invalid_argument("edge function queried off the edge set: (" +
                                    graph_->vertex_id(p) + "," + graph_->vertex_id(q) + ")");
    }

    const WeightedGraph* graph_;
    ComplexVector vals_;
};

class OneForm {
public:
    explicit OneForm(const WeightedGraph& g)
        : graph_(&g), vals_(ComplexVector::Zero(static_cast<Eigen::Index>(g.num_edges()))) {}

    static OneForm from_real(const WeightedGraph& g, const Vector& edge_values) {
        if (edge_values.size() != static_cast<Eigen::Index>(g.num_edges())) {
            throw std::invalid_argument("one-form value count does not match edge count");
        }
        OneForm a(g);
        a.vals_ = edge_values.cast<Complex>();
        return a;
    }

    [[nodiscard]] const WeightedGraph& graph() const { return *graph_; }

    /// Value against the (p,q) orientation; the reverse orientation negates.
    [[nodiscard]] Complex operator()(Index p, Index q) const {
        const auto [e, flip] = slot(p, q);
        return flip ? -vals_[e] : vals_[e];
    }

    void set(Index p, Index q, Complex value) {
        const auto [e, flip] = slot(p, q);
        vals_[e] = flip ? -value : value;
    }

    /// One value per edge, stored against the p < q orientation.
    [[nodiscard]] const ComplexVector& values() const { return vals_; }
    [[nodiscard]] ComplexVector& values() { return vals_; }

    [[nodiscard]] bool is_real(Real tol = 0.0) const {
        for (Eigen::Index e = 0; e < vals_.size(); ++e) {
            if (std::abs(vals_[e].imag()) > tol) return false;
        }
        return true;
    }

    /// Edge values as reals; magnetic potentials must pass through here.
    [[nodiscard]] Vector real_values() const {
        if (!is_real()) throw std::invalid_argument("one-form is not real-valued");
        return vals_.real();
    }

    friend OneForm operator+(OneForm lhs, const OneForm& rhs) {
        detail::check_same_graph(lhs.graph_, rhs.graph_);
        lhs.vals_ += rhs.vals_;
        return lhs;
    }

    friend OneForm operator-(OneForm lhs, const OneForm& rhs) {
        detail::check_same_graph(lhs.graph_, rhs.graph_);
        lhs.vals_ -= rhs.vals_;
        return lhs;
    }

    friend OneForm operator-(OneForm a) {
        a.vals_ = -a.vals_;
        return a;
    }

    friend OneForm operator*(Complex c, OneForm a) {
        a.vals_ *= c;
        return a;
    }

private:
    [[nodiscard]] std::pair<Eigen::Index, bool> slot(Index p, Index q) const {
        const auto& edges = graph_->edges();
        for (const auto& a : graph_->arcs(p)) {
            if (a.to == q) return {static_cast<Eigen::Index>(a.edge), edges[a.edge].p != p};
        }
        throw std::invalid_argument("one-form queried off the edge set: (" +
                                    graph_->vertex_id(p) + "," + graph_->vertex_id(q) + ")");
    }

    const WeightedGraph* graph_;
    ComplexVector vals_;
};

// ============================================================================
// Calculus
// ============================================================================

/// Antisymmetric part (1/2)(w(p,q) - w(q,p)), an orthogonal projection onto
/// one-forms under the b-weighted inner product.
inline OneForm antisymmetrize(const EdgeFunction& w) {
    const auto& g = w.graph();
    OneForm out(g);
    const auto& edges = g.edges();
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const auto ei = static_cast<Eigen::Index>(e);
        out.values()[ei] = 0.5 * (w.values()[2 * ei] - w.values()[2 * ei + 1]);
    }
    return out;
}

/// A one-form viewed as an edge function on both orientations.
inline EdgeFunction to_edge_function(const OneForm& a) {
    const auto& g = a.graph();
    EdgeFunction out(g);
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
        const auto ei = static_cast<Eigen::Index>(e);
        out.values()[2 * ei] = a.values()[ei];
        out.values()[2 * ei + 1] = -a.values()[ei];
    }
    return out;
}

/// Differential df(p,q) = f(p) - f(q) on every oriented edge.
inline EdgeFunction derive(const WeightedGraph& g, const ComplexVector& f) {
    detail::check_size(g, f.size(), "derive f");
    EdgeFunction out(g);
    const auto& edges = g.edges();
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const auto ei = static_cast<Eigen::Index>(e);
        const Complex d = f[edges[e].p] - f[edges[e].q];
        out.values()[2 * ei] = d;
        out.values()[2 * ei + 1] = -d;
    }
    return out;
}

/// df as a one-form (the differential is already antisymmetric).
inline OneForm exact_form(const WeightedGraph& g, const ComplexVector& f) {
    detail::check_size(g, f.size(), "exact_form f");
    OneForm out(g);
    const auto& edges = g.edges();
    for (std::size_t e = 0; e < edges.size(); ++e) {
        out.values()[static_cast<Eigen::Index>(e)] = f[edges[e].p] - f[edges[e].q];
    }
    return out;
}

inline OneForm exact_form(const WeightedGraph& g, const Vector& f) {
    return exact_form(g, ComplexVector(f.cast<Complex>()));
}

/// b-weighted inner product over ordered pairs.
inline Complex inner(const EdgeFunction& w1, const EdgeFunction& w2) {
    detail::check_same_graph(&w1.graph(), &w2.graph());
    const auto& edges = w1.graph().edges();
    Complex acc{0.0, 0.0};
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const auto ei = static_cast<Eigen::Index>(e);
        acc += edges[e].b * (w1.values()[2 * ei] * std::conj(w2.values()[2 * ei]) +
                             w1.values()[2 * ei + 1] * std::conj(w2.values()[2 * ei + 1]));
    }
    return acc;
}

inline Complex inner(const OneForm& a1, const OneForm& a2) {
    detail::check_same_graph(&a1.graph(), &a2.graph());
    const auto& edges = a1.graph().edges();
    Complex acc{0.0, 0.0};
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const auto ei = static_cast<Eigen::Index>(e);
        acc += 2.0 * edges[e].b * a1.values()[ei] * std::conj(a2.values()[ei]);
    }
    return acc;
}

/// Squared seminorm ||w||^2 = <w,w>; real by construction.
inline Real form_norm_squared(const EdgeFunction& w) { return inner(w, w).real(); }
inline Real form_norm_squared(const OneForm& a) { return inner(a, a).real(); }

/// Vertex-function action (g.a)(p,q) = (1/2)(g(p)+g(q)) a(p,q); left and right
/// actions coincide on antisymmetric forms, and ||g.a|| <= max|g| ||a||.
inline OneForm act(const ComplexVector& g, const OneForm& a) {
    const auto& graph = a.graph();
    detail::check_size(graph, g.size(), "act g");
    OneForm out(graph);
    const auto& edges = graph.edges();
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const auto ei = static_cast<Eigen::Index>(e);
        out.values()[ei] = 0.5 * (g[edges[e].p] + g[edges[e].q]) * a.values()[ei];
    }
    return out;
}

/// Divergence (dual of the differential): del*w(p) = sum_q w(p,q) n(p,q).
/// For antisymmetric w, <df,w> = <f, del*w>_mu for every f, and del*(df) = -Lf.
inline ComplexVector divergence(const EdgeFunction& w) {
    const auto& g = w.graph();
    const auto& edges = g.edges();
    ComplexVector out = ComplexVector::Zero(g.num_vertices());
    for (Index p = 0; p < g.num_vertices(); ++p) {
        Complex acc{0.0, 0.0};
        for (const auto& arc : g.arcs(p)) {
            const auto ei = static_cast<Eigen::Index>(arc.edge);
            const Complex val = edges[arc.edge].p == p ? w.values()[2 * ei] : w.values()[2 * ei + 1];
            acc += val * (2.0 * edges[arc.edge].b / g.mu(p));
        }
        out[p] = acc;
    }
    return out;
}

inline ComplexVector divergence(const OneForm& a) {
    const auto& g = a.graph();
    const auto& edges = g.edges();
    ComplexVector out = ComplexVector::Zero(g.num_vertices());
    for (Index p = 0; p < g.num_vertices(); ++p) {
        Complex acc{0.0, 0.0};
        for (const auto& arc : g.arcs(p)) {
            const auto ei = static_cast<Eigen::Index>(arc.edge);
            const Complex val = edges[arc.edge].p == p ? a.values()[ei] : -a.values()[ei];
            acc += val * (2.0 * edges[arc.edge].b / g.mu(p));
        }
        out[p] = acc;
    }
    return out;
}

// ============================================================================
// Hodge decomposition
// ============================================================================

struct HodgeResult {
    ComplexVector potential;   // u with w = du + circulation
    OneForm circulation;       // divergence-free remainder
    Real divergence_residual;  // mu-weighted norm of del*(circulation)
};

/// Orthogonal split w = du + eta with del* eta = 0. The potential solves the
/// mu-weighted normal equations (-L)u = del*w, one symmetric positive solve
/// per connected component, gauge-fixed to zero mu-mean.
inline HodgeResult hodge(const WeightedGraph& g, const OneForm& w) {
    const Index n = g.num_vertices();
    const auto& edges = g.edges();

    // mu-weighted system: S u = r with S(p,q) = -2 b(p,q), S(p,p) = sum 2 b,
    // r(p) = sum_q 2 b(p,q) w(p,q). S is the symmetric PSD form matrix of E.
    Matrix s = Matrix::Zero(n, n);
    ComplexVector r = ComplexVector::Zero(n);
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const auto& ed = edges[e];
        if (ed.p == ed.q) continue;
        s(ed.p, ed.q) -= 2.0 * ed.b;
        s(ed.q, ed.p) -= 2.0 * ed.b;
        s(ed.p, ed.p) += 2.0 * ed.b;
        s(ed.q, ed.q) += 2.0 * ed.b;
        const Complex val = w.values()[static_cast<Eigen::Index>(e)];
        r[ed.p] += 2.0 * ed.b * val;
        r[ed.q] -= 2.0 * ed.b * val;
    }

    const auto comps = connected_components(g);
    ComplexVector u = ComplexVector::Zero(n);
    for (Index c = 0; c < comps.count; ++c) {
        std::vector<Index> members;
        for (Index p = 0; p < n; ++p) {
            if (comps.label[p] == c) members.push_back(p);
        }
        const auto m = static_cast<Eigen::Index>(members.size());
        Matrix sc(m, m);
        Vector muc(m);
        ComplexVector rc(m);
        for (Eigen::Index i = 0; i < m; ++i) {
            muc[i] = g.mu(members[i]);
            rc[i] = r[members[i]];
            for (Eigen::Index j = 0; j < m; ++j) sc(i, j) = s(members[i], members[j]);
        }
        // Rank-one gauge term pins the mu-mean without disturbing the solution:
        // the right-hand side is mu-orthogonal to constants.
        const Real sigma = m > 1 ? sc.trace() / static_cast<Real>(m) : 1.0;
        const Matrix a = sc + (sigma / muc.sum()) * (muc * muc.transpose());
        Eigen::LDLT<Matrix> solver(a);
        if (solver.info() != Eigen::Success) {
            throw std::runtime_error("hodge solve failed: factorization did not succeed");
        }
        const Vector ure = solver.solve(Vector(rc.real()));
        const Vector uim = solver.solve(Vector(rc.imag()));
        const Vector res_re = a * ure - rc.real();
        const Vector res_im = a * uim - rc.imag();
        const Real rel = std::sqrt(res_re.squaredNorm() + res_im.squaredNorm()) /
                         (1.0 + std::sqrt(rc.squaredNorm()));
        if (rel > 1e-8) {
            throw std::runtime_error("hodge solve failed: relative residual " + std::to_string(rel));
        }
        for (Eigen::Index i = 0; i < m; ++i) u[members[i]] = Complex{ure[i], uim[i]};
    }

    HodgeResult out{std::move(u), OneForm(g), 0.0};
    out.circulation = w - exact_form(g, out.potential);
    const ComplexVector div_eta = divergence(out.circulation);
    Real acc = 0.0;
    for (Index p = 0; p < n; ++p) acc += std::norm(div_eta[p]) * g.mu(p);
    out.divergence_residual = std::sqrt(acc);
    return out;
}

} // namespace magjump
