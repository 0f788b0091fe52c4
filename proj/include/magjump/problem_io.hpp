#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "magjump/graph.hpp"
#include "magjump/one_forms.hpp"
#include "magjump/path_simulator.hpp"
#include "magjump/types.hpp"

namespace magjump {

// ============================================================================
// Problem files
//
// A problem document is a single JSON tree with top-level keys "nodes",
// "edges", and "run":
//   nodes: [{id, mu, v}]            v defaults to 0
//   edges: [{p, q, b, a}]           one record per unordered pair; a is the
//                                   one-form value against the (p, q)
//                                   orientation and defaults to 0
//   run:   {t, num_paths, seed, eps, tolerances}
// Parsing validates the whole document and reports every violation with its
// field path; parse(emit(spec)) reproduces the spec structurally.
// ============================================================================

struct NodeRecord {
    std::string id;
    Real mu = 1.0;
    Real v = 0.0;
    friend bool operator==(const NodeRecord&, const NodeRecord&) = default;
};

struct EdgeRecord {
    std::string p;
    std::string q;
    Real b = 0.0;
    Real a = 0.0;
    friend bool operator==(const EdgeRecord&, const EdgeRecord&) = default;
};

struct RunParameters {
    std::vector<Real> t_grid{1.0};
    std::size_t num_paths = 100000;
    std::optional<std::uint64_t> seed;
    std::vector<Real> eps_grid{1.0, 0.1, 0.01};
    std::map<std::string, Real> tolerances;
    friend bool operator==(const RunParameters&, const RunParameters&) = default;
};

struct ProblemSpec {
    std::vector<NodeRecord> nodes;
    std::vector<EdgeRecord> edges;
    RunParameters run;
    friend bool operator==(const ProblemSpec&, const ProblemSpec&) = default;
};

namespace detail {

class SchemaErrors {
public:
    void add(const std::string& where, const std::string& what) {
        messages_.push_back(where + ": " + what);
    }
    [[nodiscard]] bool empty() const { return messages_.empty(); }
    [[noreturn]] void raise() const {
        std::string joined = "invalid problem document";
        for (const auto& m : messages_) joined += "\n  - " + m;
        throw std::invalid_argument(joined);
    }
    [[nodiscard]] const std::vector<std::string>& messages() const { return messages_; }

private:
    std::vector<std::string> messages_;
};

inline bool read_real(const nlohmann::json& node, const char* key, const std::string& where,
                      Real& out, SchemaErrors& errors) {
    const auto it = node.find(key);
    if (it == node.end()) return false;
    if (!it->is_number()) {
        errors.add(where + "." + key, "must be a number");
        return false;
    }
    out = it->get<Real>();
    return true;
}

inline void reject_unknown_keys(const nlohmann::json& node, const std::string& where,
                                std::initializer_list<const char*> allowed, SchemaErrors& errors) {
    for (const auto& item : node.items()) {
        bool known = false;
        for (const char* key : allowed) known = known || item.key() == key;
        if (!known) errors.add(where + "." + item.key(), "unknown field");
    }
}

} // namespace detail

/// Parses and validates a problem document; throws std::invalid_argument
/// listing every schema violation with its field path.
inline ProblemSpec parse_problem(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("invalid problem document\n  - parse error: ") +
                                    e.what());
    }

    detail::SchemaErrors errors;
    ProblemSpec spec;
    if (!doc.is_object()) {
        errors.add("$", "top level must be an object with keys nodes, edges, run");
        errors.raise();
    }
    detail::reject_unknown_keys(doc, "$", {"nodes", "edges", "run"}, errors);

    std::unordered_set<std::string> ids;
    if (!doc.contains("nodes") || !doc["nodes"].is_array() || doc["nodes"].empty()) {
        errors.add("nodes", "required non-empty array");
    } else {
        std::size_t k = 0;
        for (const auto& node : doc["nodes"]) {
            const std::string where = "nodes[" + std::to_string(k++) + "]";
            if (!node.is_object()) {
                errors.add(where, "must be an object {id, mu, v}");
                continue;
            }
            detail::reject_unknown_keys(node, where, {"id", "mu", "v"}, errors);
            NodeRecord rec;
            if (!node.contains("id") || !node["id"].is_string()) {
                errors.add(where + ".id", "required string");
                continue;
            }
            rec.id = node["id"].get<std::string>();
            if (!ids.insert(rec.id).second) errors.add(where + ".id", "duplicate id \"" + rec.id + "\"");
            if (!detail::read_real(node, "mu", where, rec.mu, errors)) {
                errors.add(where + ".mu", "required number");
            } else if (!(rec.mu > 0.0) || !std::isfinite(rec.mu)) {
                errors.add(where + ".mu", "must be positive and finite");
            }
            detail::read_real(node, "v", where, rec.v, errors);
            if (!std::isfinite(rec.v)) errors.add(where + ".v", "must be finite");
            spec.nodes.push_back(std::move(rec));
        }
    }

    std::unordered_set<std::string> pairs;
    if (doc.contains("edges")) {
        if (!doc["edges"].is_array()) {
            errors.add("edges", "must be an array");
        } else {
            std::size_t k = 0;
            for (const auto& edge : doc["edges"]) {
                const std::string where = "edges[" + std::to_string(k++) + "]";
                if (!edge.is_object()) {
                    errors.add(where, "must be an object {p, q, b, a}");
                    continue;
                }
                detail::reject_unknown_keys(edge, where, {"p", "q", "b", "a"}, errors);
                EdgeRecord rec;
                bool endpoints_ok = true;
                for (const char* key : {"p", "q"}) {
                    if (!edge.contains(key) || !edge[key].is_string()) {
                        errors.add(where + "." + key, "required string");
                        endpoints_ok = false;
                        continue;
                    }
                    const auto id = edge[key].get<std::string>();
                    if (ids.find(id) == ids.end()) {
                        errors.add(where + "." + key, "unknown vertex \"" + id + "\"");
                        endpoints_ok = false;
                    }
                    (key[0] == 'p' ? rec.p : rec.q) = id;
                }
                if (endpoints_ok) {
                    const std::string pair_key =
                        rec.p < rec.q ? rec.p + "\n" + rec.q : rec.q + "\n" + rec.p;
                    if (!pairs.insert(pair_key).second) {
                        errors.add(where, "duplicate edge {" + rec.p + ", " + rec.q + "}");
                    }
                }
                if (!detail::read_real(edge, "b", where, rec.b, errors)) {
                    errors.add(where + ".b", "required number");
                } else if (rec.b < 0.0 || !std::isfinite(rec.b)) {
                    errors.add(where + ".b", "must be nonnegative and finite");
                }
                detail::read_real(edge, "a", where, rec.a, errors);
                if (!std::isfinite(rec.a)) errors.add(where + ".a", "must be finite");
                if (endpoints_ok && rec.p == rec.q && rec.a != 0.0) {
                    errors.add(where + ".a", "loop edges cannot carry a one-form value");
                }
                spec.edges.push_back(std::move(rec));
            }
        }
    }

    if (doc.contains("run")) {
        const auto& run = doc["run"];
        if (!run.is_object()) {
            errors.add("run", "must be an object");
        } else {
            detail::reject_unknown_keys(run, "run", {"t", "num_paths", "seed", "eps", "tolerances"},
                                        errors);
            if (run.contains("t")) {
                if (!run["t"].is_array() || run["t"].empty()) {
                    errors.add("run.t", "must be a non-empty array of positive times");
                } else {
                    spec.run.t_grid.clear();
                    std::size_t k = 0;
                    for (const auto& t : run["t"]) {
                        const std::string where = "run.t[" + std::to_string(k++) + "]";
                        if (!t.is_number() || !(t.get<Real>() > 0.0)) {
                            errors.add(where, "must be a positive number");
                        } else {
                            spec.run.t_grid.push_back(t.get<Real>());
                        }
                    }
                }
            }
            if (run.contains("num_paths")) {
                if (!run["num_paths"].is_number_unsigned() || run["num_paths"].get<std::size_t>() < 2) {
                    errors.add("run.num_paths", "must be an integer of at least 2");
                } else {
                    spec.run.num_paths = run["num_paths"].get<std::size_t>();
                }
            }
            if (run.contains("seed")) {
                if (!run["seed"].is_number_unsigned()) {
                    errors.add("run.seed", "must be a nonnegative integer");
                } else {
                    spec.run.seed = run["seed"].get<std::uint64_t>();
                }
            }
            if (run.contains("eps")) {
                if (!run["eps"].is_array()) {
                    errors.add("run.eps", "must be an array of positive thresholds");
                } else {
                    spec.run.eps_grid.clear();
                    std::size_t k = 0;
                    for (const auto& eps : run["eps"]) {
                        const std::string where = "run.eps[" + std::to_string(k++) + "]";
                        if (!eps.is_number() || !(eps.get<Real>() > 0.0)) {
                            errors.add(where, "must be a positive number");
                        } else {
                            spec.run.eps_grid.push_back(eps.get<Real>());
                        }
                    }
                }
            }
            if (run.contains("tolerances")) {
                if (!run["tolerances"].is_object()) {
                    errors.add("run.tolerances", "must map check names to numbers");
                } else {
                    for (const auto& item : run["tolerances"].items()) {
                        if (!item.value().is_number()) {
                            errors.add("run.tolerances." + item.key(), "must be a number");
                        } else {
                            spec.run.tolerances[item.key()] = item.value().get<Real>();
                        }
                    }
                }
            }
        }
    }

    if (!errors.empty()) errors.raise();
    return spec;
}

/// Reads and parses a problem file.
inline ProblemSpec load_problem(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open problem file " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_problem(buffer.str());
}

/// Canonical JSON text of a spec; parse(emit(spec)) == spec.
inline std::string emit_problem(const ProblemSpec& spec) {
    nlohmann::ordered_json doc;
    doc["nodes"] = nlohmann::ordered_json::array();
    for (const auto& node : spec.nodes) {
        doc["nodes"].push_back({{"id", node.id}, {"mu", node.mu}, {"v", node.v}});
    }
    doc["edges"] = nlohmann::ordered_json::array();
    for (const auto& edge : spec.edges) {
        doc["edges"].push_back({{"p", edge.p}, {"q", edge.q}, {"b", edge.b}, {"a", edge.a}});
    }
    auto& run = doc["run"];
    run["t"] = spec.run.t_grid;
    run["num_paths"] = spec.run.num_paths;
    if (spec.run.seed) run["seed"] = *spec.run.seed;
    run["eps"] = spec.run.eps_grid;
    run["tolerances"] = nlohmann::ordered_json::object();
    for (const auto& [name, value] : spec.run.tolerances) run["tolerances"][name] = value;
    return doc.dump(2) + "\n";
}

// ============================================================================
// Built problem: graph, magnetic potential, scalar potential
// ============================================================================

/// The executable form of a ProblemSpec. Not copyable: the one-form is bound
/// to the graph member's address.
class ProblemInstance {
public:
    explicit ProblemInstance(const ProblemSpec& spec) {
        for (const auto& node : spec.nodes) graph_.add_vertex(node.id, node.mu);
        for (const auto& edge : spec.edges) graph_.add_edge(edge.p, edge.q, edge.b);
        a_.emplace(graph_);
        for (const auto& edge : spec.edges) {
            if (edge.p == edge.q) continue;
            a_->set(graph_.index_of(edge.p), graph_.index_of(edge.q), Complex{edge.a, 0.0});
        }
        v_.resize(graph_.num_vertices());
        for (Index p = 0; p < graph_.num_vertices(); ++p) v_[p] = spec.nodes[static_cast<std::size_t>(p)].v;
    }

    ProblemInstance(const ProblemInstance&) = delete;
    ProblemInstance& operator=(const ProblemInstance&) = delete;

    [[nodiscard]] const WeightedGraph& graph() const { return graph_; }
    [[nodiscard]] const OneForm& vector_potential() const { return *a_; }
    [[nodiscard]] const Vector& scalar_potential() const { return v_; }

    /// Replaces a by -a, switching the line-integral increment from
    /// (from, to) to (to, from) everywhere downstream.
    void flip_orientation() { a_.emplace(-*a_); }

private:
    WeightedGraph graph_;
    std::optional<OneForm> a_;
    Vector v_;
};

// ============================================================================
// Path dumps
// ============================================================================

/// One row per event: path,time,from,to. Each path opens with a marker row
/// (time 0, from == to == start); the horizon travels out of band.
inline std::string emit_paths_csv(const std::vector<JumpPath>& paths) {
    std::ostringstream out;
    out.precision(17);
    out << "path,time,from,to\n";
    for (std::size_t k = 0; k < paths.size(); ++k) {
        const auto& path = paths[k];
        out << k << ",0," << path.start << "," << path.start << "\n";
        Index state = path.start;
        for (const auto& e : path.events) {
            out << k << "," << e.time << "," << state << "," << e.target << "\n";
            state = e.target;
        }
    }
    return out.str();
}

/// Rebuilds paths from a dump; the horizon is supplied by the caller. Rejects
/// rows whose "from" column disagrees with the running state.
inline std::vector<JumpPath> parse_paths_csv(const std::string& text, Real horizon) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "path,time,from,to") {
        throw std::invalid_argument("path dump: missing header row");
    }
    std::vector<JumpPath> paths;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::size_t key = 0;
        Real time = 0.0;
        long from = 0;
        long to = 0;
        char c1 = 0, c2 = 0, c3 = 0;
        fields >> key >> c1 >> time >> c2 >> from >> c3 >> to;
        if (!fields || c1 != ',' || c2 != ',' || c3 != ',') {
            throw std::invalid_argument("path dump: malformed row " + std::to_string(row));
        }
        if (time == 0.0 && from == to) {
            if (key != paths.size()) {
                throw std::invalid_argument("path dump: path keys must be consecutive at row " +
                                            std::to_string(row));
            }
            JumpPath path;
            path.start = static_cast<Index>(from);
            path.horizon = horizon;
            path.stream_id = key;
            paths.push_back(std::move(path));
            continue;
        }
        if (paths.empty() || key + 1 != paths.size()) {
            throw std::invalid_argument("path dump: event before its start marker at row " +
                                        std::to_string(row));
        }
        JumpPath& path = paths.back();
        const Index state = path.final_state();
        if (static_cast<Index>(from) != state) {
            throw std::invalid_argument("path dump: from column disagrees with the running state at row " +
                                        std::to_string(row));
        }
        path.events.push_back({time, static_cast<Index>(to)});
    }
    return paths;
}

} // namespace magjump
