#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "magjump/types.hpp"

namespace magjump {

// ============================================================================
// Weighted graph (V, b, mu)
//
// Edge weights b are symmetric and stored once per unordered pair. The vertex
// measure mu weights the l2 inner product <f,g>_mu = sum_p f(p) conj(g(p)) mu(p).
// Construction is permissive (diagonal or negative entries are representable)
// so that validate() can report violations; every other operation assumes a
// graph that validates cleanly.
// ============================================================================

class WeightedGraph {
public:
    struct Edge {
        Index p, q; // normalized p <= q
        Real b;
    };

    /// Adjacency entry: directed arc to a neighbour, with the backing edge slot.
    struct Arc {
        Index to;
        std::int32_t edge;
    };

    Index add_vertex(std::string id, Real mu_value) {
        if (index_.count(id)) throw std::invalid_argument("duplicate vertex id '" + id + "'");
        const Index p = static_cast<Index>(ids_.size());
        index_.emplace(id, p);
        ids_.push_back(std::move(id));
        mu_.push_back(mu_value);
        arcs_.emplace_back();
        return p;
    }

    void add_edge(Index p, Index q, Real b) {
        check_index(p);
        check_index(q);
        if (p > q) std::swap(p, q);
        const std::uint64_t key = pair_key(p, q);
        if (edge_slot_.count(key)) {
            throw std::invalid_argument("duplicate edge (" + ids_[p] + "," + ids_[q] + ")");
        }
        const auto slot = static_cast<std::int32_t>(edges_.size());
        edge_slot_.emplace(key, slot);
        edges_.push_back({p, q, b});
        if (p != q) {
            insert_arc(p, {q, slot});
            insert_arc(q, {p, slot});
        }
    }

    void add_edge(const std::string& p, const std::string& q, Real b) {
        add_edge(index_of(p), index_of(q), b);
    }

    [[nodiscard]] Index num_vertices() const { return static_cast<Index>(ids_.size()); }
    [[nodiscard]] std::size_t num_edges() const { return edges_.size(); }

    [[nodiscard]] const std::string& vertex_id(Index p) const {
        check_index(p);
        return ids_[p];
    }

    [[nodiscard]] bool has_vertex(const std::string& id) const { return index_.count(id) != 0; }

    [[nodiscard]] Index index_of(const std::string& id) const {
        auto it = index_.find(id);
        if (it == index_.end()) throw std::invalid_argument("unknown vertex id '" + id + "'");
        return it->second;
    }

    [[nodiscard]] Real mu(Index p) const {
        check_index(p);
        return mu_[p];
    }

    /// Vertex measure as a dense vector, in index order.
    [[nodiscard]] Vector measure() const {
        return Eigen::Map<const Vector>(mu_.data(), static_cast<Eigen::Index>(mu_.size()));
    }

    [[nodiscard]] Real total_mass() const {
        Real s = 0.0;
        for (Real m : mu_) s += m;
        return s;
    }

    /// b(p,q); zero when the pair carries no edge.
    [[nodiscard]] Real weight(Index p, Index q) const {
        check_index(p);
        check_index(q);
        if (p > q) std::swap(p, q);
        auto it = edge_slot_.find(pair_key(p, q));
        return it == edge_slot_.end() ? 0.0 : edges_[it->second].b;
    }

    [[nodiscard]] const std::vector<Edge>& edges() const { return edges_; }

    /// Arcs out of p, sorted by target index. Diagonal entries never appear here.
    [[nodiscard]] const std::vector<Arc>& arcs(Index p) const {
        check_index(p);
        return arcs_[p];
    }

    /// Jump intensity n(p,q) = 2 b(p,q) / mu(p).
    [[nodiscard]] Real kernel(Index p, Index q) const { return 2.0 * weight(p, q) / mu(p); }

    /// Total jump rate out of p. Vertices with rate zero absorb the chain.
    [[nodiscard]] Real rate(Index p) const {
        Real r = 0.0;
        for (const Arc& a : arcs(p)) r += 2.0 * edges_[a.edge].b / mu_[p];
        return r;
    }

private:
    static std::uint64_t pair_key(Index p, Index q) {
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(p)) << 32) |
               static_cast<std::uint64_t>(static_cast<std::uint32_t>(q));
    }

    void insert_arc(Index from, Arc arc) {
        auto& row = arcs_[from];
        auto pos = std::lower_bound(row.begin(), row.end(), arc.to,
                                    [](const Arc& a, Index t) { return a.to < t; });
        row.insert(pos, arc);
    }

    void check_index(Index p) const {
        if (p < 0 || p >= static_cast<Index>(ids_.size())) {
            throw std::out_of_range("vertex index " + std::to_string(p) + " out of range");
        }
    }

    std::vector<std::string> ids_;
    std::unordered_map<std::string, Index> index_;
    std::vector<Real> mu_;
    std::vector<Edge> edges_;
    std::unordered_map<std::uint64_t, std::int32_t> edge_slot_;
    std::vector<std::vector<Arc>> arcs_;
};

// ============================================================================
// Validation
// ============================================================================

/// Checks the standing assumptions: at least one vertex, mu > 0, b >= 0 and
/// finite, no diagonal weight. Symmetry of b holds by construction. Returns
/// one message per violation, naming the offending vertex or pair.
inline std::vector<std::string> validate(const WeightedGraph& g) {
    std::vector<std::string> out;
    if (g.num_vertices() == 0) {
        out.emplace_back("graph has no vertices");
        return out;
    }
    for (Index p = 0; p < g.num_vertices(); ++p) {
        const Real m = g.mu(p);
        if (!(m > 0.0) || !std::isfinite(m)) {
            std::ostringstream os;
            os << "nonpositive measure mu=" << m << " at vertex '" << g.vertex_id(p) << "'";
            out.push_back(os.str());
        }
    }
    for (const auto& e : g.edges()) {
        std::ostringstream os;
        if (e.p == e.q && e.b != 0.0) {
            os << "nonzero diagonal weight b=" << e.b << " at vertex '" << g.vertex_id(e.p) << "'";
            out.push_back(os.str());
        } else if (!std::isfinite(e.b)) {
            os << "non-finite weight at pair ('" << g.vertex_id(e.p) << "','" << g.vertex_id(e.q) << "')";
            out.push_back(os.str());
        } else if (e.b < 0.0) {
            os << "negative weight b=" << e.b << " at pair ('" << g.vertex_id(e.p) << "','"
               << g.vertex_id(e.q) << "')";
            out.push_back(os.str());
        }
    }
    return out;
}

namespace detail {

inline void check_size(const WeightedGraph& g, Eigen::Index n, const char* what) {
    if (n != g.num_vertices()) {
        throw std::invalid_argument(std::string(what) + ": size " + std::to_string(n) +
                                    " does not match vertex count " +
                                    std::to_string(g.num_vertices()));
    }
}

} // namespace detail

// ============================================================================
// Energy form, jump kernel, generator
// ============================================================================

/// Dirichlet form E(f,g) = sum_p sum_q b(p,q) (f(p)-f(q)) conj(g(p)-g(q)),
/// summed over ordered pairs; evaluated edgewise since both orientations of an
/// edge contribute the identical product.
inline Complex dirichlet_energy(const WeightedGraph& g, const ComplexVector& f,
                                const ComplexVector& h) {
    detail::check_size(g, f.size(), "dirichlet_energy f");
    detail::check_size(g, h.size(), "dirichlet_energy g");
    Complex acc{0.0, 0.0};
    for (const auto& e : g.edges()) {
        if (e.p == e.q) continue;
        acc += 2.0 * e.b * (f[e.p] - f[e.q]) * std::conj(h[e.p] - h[e.q]);
    }
    return acc;
}

/// E(f) = E(f,f); real and nonnegative for nonnegative weights.
inline Real dirichlet_energy(const WeightedGraph& g, const ComplexVector& f) {
    detail::check_size(g, f.size(), "dirichlet_energy f");
    Real acc = 0.0;
    for (const auto& e : g.edges()) {
        if (e.p == e.q) continue;
        acc += 2.0 * e.b * std::norm(f[e.p] - f[e.q]);
    }
    return acc;
}

inline Real dirichlet_energy(const WeightedGraph& g, const Vector& f) {
    return dirichlet_energy(g, ComplexVector(f.cast<Complex>()));
}

/// Jump intensities of the associated Markov chain: n(p,q) = 2 b(p,q) / mu(p),
/// so that the jump measure J = (1/2) n mu recovers J({p},{q}) = b(p,q).
/// Detailed balance n(p,q) mu(p) = n(q,p) mu(q) holds by symmetry of b.
class JumpKernel {
public:
    explicit JumpKernel(const WeightedGraph& g) : graph_(&g), rates_(g.num_vertices()) {
        for (Index p = 0; p < g.num_vertices(); ++p) rates_[p] = g.rate(p);
    }

    [[nodiscard]] Real operator()(Index p, Index q) const { return graph_->kernel(p, q); }
    [[nodiscard]] Real rate(Index p) const { return rates_[p]; }
    [[nodiscard]] const Vector& rates() const { return rates_; }
    [[nodiscard]] const WeightedGraph& graph() const { return *graph_; }

private:
    const WeightedGraph* graph_;
    Vector rates_;
};

inline JumpKernel jump_kernel(const WeightedGraph& g) { return JumpKernel(g); }

/// Dense generator L(p,q) = n(p,q) off the diagonal, L(p,p) = -rate(p).
/// Rows sum to zero; L is self-adjoint in the mu-weighted inner product and
/// -<Lf,g>_mu equals the Dirichlet form.
inline Matrix generator_matrix(const WeightedGraph& g) {
    const Index n = g.num_vertices();
    Matrix l = Matrix::Zero(n, n);
    for (Index p = 0; p < n; ++p) {
        Real r = 0.0;
        for (const auto& a : g.arcs(p)) {
            const Real npq = 2.0 * g.edges()[a.edge].b / g.mu(p);
            l(p, a.to) += npq;
            r += npq;
        }
        l(p, p) = -r;
    }
    return l;
}

/// Pointwise energy density Gamma(f)(p) = (1/2) sum_q n(p,q) |f(p)-f(q)|^2.
/// Its mu-weighted total mass equals the Dirichlet energy.
inline Vector energy_density(const WeightedGraph& g, const ComplexVector& f) {
    detail::check_size(g, f.size(), "energy_density f");
    const Index n = g.num_vertices();
    Vector gamma = Vector::Zero(n);
    for (Index p = 0; p < n; ++p) {
        Real acc = 0.0;
        for (const auto& a : g.arcs(p)) {
            acc += (2.0 * g.edges()[a.edge].b / g.mu(p)) * std::norm(f[p] - f[a.to]);
        }
        gamma[p] = 0.5 * acc;
    }
    return gamma;
}

inline Vector energy_density(const WeightedGraph& g, const Vector& f) {
    return energy_density(g, ComplexVector(f.cast<Complex>()));
}

// ============================================================================
// Constructors
// ============================================================================

/// One-dimensional lattice x_p = p h with long-range weights
/// b(p,q) = (1/2) |x_p - x_q|^(-1-alpha) h^2, zeroed beyond the cutoff
/// distance, and vertex measure mu = h. Discretizes a fractional kinetic
/// energy; alpha must lie strictly inside (0,2).
inline WeightedGraph build_stable_lattice(Index num_points, Real spacing, Real alpha,
                                          Real cutoff = std::numeric_limits<Real>::infinity()) {
    if (num_points < 2) throw std::invalid_argument("stable lattice needs at least 2 points");
    if (!(spacing > 0.0)) throw std::invalid_argument("stable lattice spacing must be positive");
    if (!(alpha > 0.0 && alpha < 2.0)) {
        throw std::invalid_argument("stable lattice exponent alpha must lie in (0,2)");
    }
    if (!(cutoff > 0.0)) throw std::invalid_argument("stable lattice cutoff must be positive");
    WeightedGraph g;
    for (Index p = 0; p < num_points; ++p) g.add_vertex(std::to_string(p), spacing);
    for (Index p = 0; p < num_points; ++p) {
        for (Index q = p + 1; q < num_points; ++q) {
            const Real dist = static_cast<Real>(q - p) * spacing;
            if (dist > cutoff) break;
            g.add_edge(p, q, 0.5 * std::pow(dist, -1.0 - alpha) * spacing * spacing);
        }
    }
    return g;
}

// ============================================================================
// Connectivity
// ============================================================================

struct Components {
    Index count = 0;
    std::vector<Index> label; // component id per vertex, ids dense from 0
};

/// Connected components of the support of b (edges with b > 0).
inline Components connected_components(const WeightedGraph& g) {
    Components c;
    c.label.assign(static_cast<std::size_t>(g.num_vertices()), -1);
    for (Index root = 0; root < g.num_vertices(); ++root) {
        if (c.label[root] >= 0) continue;
        const Index id = c.count++;
        std::queue<Index> frontier;
        frontier.push(root);
        c.label[root] = id;
        while (!frontier.empty()) {
            const Index p = frontier.front();
            frontier.pop();
            for (const auto& a : g.arcs(p)) {
                if (g.edges()[a.edge].b > 0.0 && c.label[a.to] < 0) {
                    c.label[a.to] = id;
                    frontier.push(a.to);
                }
            }
        }
    }
    return c;
}

} // namespace magjump
