#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "magjump/fki_estimator.hpp"
#include "magjump/graph.hpp"
#include "magjump/magnetic_operator.hpp"
#include "magjump/one_forms.hpp"
#include "magjump/path_simulator.hpp"
#include "magjump/problem_io.hpp"
#include "magjump/rng.hpp"
#include "magjump/stats.hpp"
#include "magjump/types.hpp"

namespace magjump {

// ============================================================================
// Command orchestration
//
// Every command loads one problem file, runs single-threaded, writes CSV files
// (header row; complex values as re/im column pairs) under the chosen output
// directory, and exits 0 exactly when every executed check passed. Results
// are deterministic for a fixed file and seed; the seed comes from run.seed,
// else the MAGJUMP_SEED environment variable, else 12345.
// ============================================================================

struct RunOptions {
    std::string command;
    std::string spec_path;
    std::string out_dir = ".";
    std::string orientation = "from-to"; // line-integral increment convention
};

struct CheckResult {
    std::string name;
    Real gap;
    Real tolerance;
    bool pass;
};

namespace detail {

inline std::uint64_t resolve_seed(const RunParameters& run) {
    if (run.seed) return *run.seed;
    if (const char* env = std::getenv("MAGJUMP_SEED")) {
        char* end = nullptr;
        const auto value = std::strtoull(env, &end, 10);
        if (end != env && *end == '\0') return value;
        throw std::invalid_argument("MAGJUMP_SEED must be a nonnegative integer");
    }
    return 12345;
}

inline Real tolerance_for(const RunParameters& run, const std::string& name, Real fallback) {
    const auto it = run.tolerances.find(name);
    return it == run.tolerances.end() ? fallback : it->second;
}

inline void write_text_file(const std::filesystem::path& dir, const std::string& name,
                            const std::string& content) {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / name);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    out << content;
}

class CsvBuilder {
public:
    explicit CsvBuilder(const std::string& header) {
        out_.precision(17);
        out_ << header << "\n";
    }
    template <typename... Cols>
    void row(const Cols&... cols) {
        bool first = true;
        ((out_ << (first ? "" : ",") << cols, first = false), ...);
        out_ << "\n";
    }
    [[nodiscard]] std::string str() const { return out_.str(); }

private:
    std::ostringstream out_;
};

inline ComplexVector random_complex_vector(RngStream& rng, Index n) {
    ComplexVector f(n);
    for (Index p = 0; p < n; ++p) {
        f[p] = Complex{2.0 * rng.next_unit() - 1.0, 2.0 * rng.next_unit() - 1.0};
    }
    return f;
}

inline Vector random_real_vector(RngStream& rng, Index n) {
    Vector f(n);
    for (Index p = 0; p < n; ++p) f[p] = 2.0 * rng.next_unit() - 1.0;
    return f;
}

inline OneForm random_real_form(RngStream& rng, const WeightedGraph& g) {
    OneForm w(g);
    const auto& edges = g.edges();
    for (std::size_t e = 0; e < edges.size(); ++e) {
        if (edges[e].p == edges[e].q) continue;
        w.values()[static_cast<Eigen::Index>(e)] = Complex{2.0 * rng.next_unit() - 1.0, 0.0};
    }
    return w;
}

} // namespace detail

// ============================================================================
// The verify suite
// ============================================================================

/// Runs every module's invariants against one problem instance. Pathwise
/// audits use up to 2000 paths; statistical checks use run.num_paths.
inline std::vector<CheckResult> run_verify(const ProblemInstance& inst, const RunParameters& run) {
    const WeightedGraph& g = inst.graph();
    const OneForm& a = inst.vector_potential();
    const Vector& v = inst.scalar_potential();
    const Index n = g.num_vertices();
    const std::uint64_t seed = detail::resolve_seed(run);
    const Real t0 = run.t_grid.front();

    std::vector<CheckResult> results;
    const auto push = [&](const std::string& name, Real gap, Real fallback_tol) {
        const Real tolerance = detail::tolerance_for(run, name, fallback_tol);
        results.push_back({name, gap, tolerance, gap <= tolerance});
    };

    push("graph-valid", static_cast<Real>(validate(g).size()), 0.0);

    const MagneticOperator op = assemble(g, a, v);

    {
        RngStream rng(seed, 9001);
        Real worst = 0.0;
        for (int k = 0; k < 20; ++k) {
            const ComplexVector f = detail::random_complex_vector(rng, n);
            const ComplexVector h = detail::random_complex_vector(rng, n);
            const FormAgreement fa = quadratic_form_check(op, f, h);
            worst = std::max(worst, fa.gap / (1.0 + std::abs(fa.lhs)));
        }
        push("form-identity", worst, 1e-11);
    }

    {
        const ComplexMatrix& h = op.matrix();
        Real worst = 0.0;
        for (Index p = 0; p < n; ++p) {
            for (Index q = 0; q < n; ++q) {
                worst = std::max(worst, std::abs(h(p, q) * g.mu(p) - std::conj(h(q, p)) * g.mu(q)));
            }
        }
        push("mu-hermiticity", worst, 1e-12);
    }

    {
        RngStream rng(seed, 9002);
        const ComplexVector f = detail::random_complex_vector(rng, n);
        const ComplexVector once = semigroup_exact(op, t0, f);
        const ComplexVector twice = semigroup_exact(op, t0 / 2.0, semigroup_exact(op, t0 / 2.0, f));
        push("semigroup-law", (once - twice).cwiseAbs().maxCoeff(), 1e-10);
    }

    {
        RngStream rng(seed, 9003);
        Real worst = 0.0;
        for (int k = 0; k < 5; ++k) {
            const Vector u = detail::random_real_vector(rng, n);
            const Vector drift = spectrum(op) - spectrum(gauge_shift(op, u));
            worst = std::max(worst, drift.cwiseAbs().maxCoeff());
        }
        push("gauge-drift", worst, 1e-10);
    }

    {
        RngStream rng(seed, 9004);
        Real worst = -std::numeric_limits<Real>::infinity();
        for (int k = 0; k < 20; ++k) {
            const ComplexVector f = detail::random_complex_vector(rng, n);
            for (const Real t : run.t_grid) worst = std::max(worst, diamagnetic_check(op, f, t));
        }
        push("diamagnetic-semigroup", worst, 1e-10);
    }

    {
        RngStream rng(seed, 9005);
        Real worst_dom = -std::numeric_limits<Real>::infinity();
        Real worst_bound = -std::numeric_limits<Real>::infinity();
        for (int k = 0; k < 50; ++k) {
            const ComplexVector f = detail::random_complex_vector(rng, n);
            const EnergyDomination dom = energy_diamag_check(g, a, f);
            worst_dom = std::max(worst_dom, (dom.lhs - dom.rhs) / (1.0 + std::abs(dom.rhs)));
            const EnergyBound bound = energy_bound_check(g, a, f);
            worst_bound = std::max(worst_bound, (bound.lhs - bound.rhs) / (1.0 + std::abs(bound.rhs)));
        }
        push("diamagnetic-energy", worst_dom, 1e-12);
        push("energy-bound", worst_bound, 1e-12);
    }

    {
        RngStream rng(seed, 9006);
        Real worst_resid = 0.0;
        Real worst_reco = 0.0;
        try {
            for (int k = 0; k < 10; ++k) {
                OneForm w(g);
                const auto& edges = g.edges();
                for (std::size_t e = 0; e < edges.size(); ++e) {
                    if (edges[e].p == edges[e].q) continue;
                    w.values()[static_cast<Eigen::Index>(e)] =
                        Complex{2.0 * rng.next_unit() - 1.0, 2.0 * rng.next_unit() - 1.0};
                }
                const HodgeResult hr = hodge(g, w);
                worst_resid = std::max(worst_resid, hr.divergence_residual);
                const OneForm du = exact_form(g, hr.potential);
                const OneForm gap = w - du - hr.circulation;
                worst_reco = std::max(worst_reco, std::sqrt(form_norm_squared(gap)));
                worst_reco = std::max(worst_reco, std::abs(inner(du, hr.circulation)));
            }
        } catch (const std::runtime_error&) {
            worst_resid = std::numeric_limits<Real>::infinity();
        }
        push("hodge-residual", worst_resid, 1e-8);
        push("hodge-reconstruction", worst_reco, 1e-10);
    }

    {
        const std::size_t num_audit = std::min<std::size_t>(run.num_paths, 2000);
        RngStream rng(seed, 9007);
        const ComplexVector f = detail::random_complex_vector(rng, n);
        const ChainSampler sampler(g);
        Real worst_odd = 0.0;
        Real worst_even = 0.0;
        Real worst_split = 0.0;
        Real worst_jump = 0.0;
        JumpPath path;
        for (std::size_t i = 0; i < num_audit; ++i) {
            RngStream stream(seed, 100000 + i);
            sampler.sample_into(path, sampler.draw_start(stream), t0, stream, i);
            const JumpPath rev = reverse(path, t0);
            const Real s_fwd = stratonovich_integral(path, a);
            const Real lambda_fwd = divergence_part(path, a);
            worst_odd = std::max(worst_odd, std::abs(stratonovich_integral(rev, a) + s_fwd));
            worst_even = std::max(worst_even, std::abs(divergence_part(rev, a) - lambda_fwd));
            worst_split = std::max(worst_split,
                                   std::abs(martingale_part(path, a) - (s_fwd - lambda_fwd)));
            worst_jump = std::max(worst_jump, jump_consistency_check(path, f, g));
        }
        push("reversal-odd", worst_odd, 1e-12);
        push("reversal-even", worst_even, 1e-12);
        push("martingale-split", worst_split, 0.0);
        push("jump-consistency", worst_jump, 1e-12);
    }

    {
        const std::size_t paths = std::min<std::size_t>(run.num_paths, 5000);
        const OneForm zero(g);
        const Vector no_potential = Vector::Zero(n);
        const ComplexVector ones = ComplexVector::Constant(n, Complex{1.0, 0.0});
        const SemigroupEstimate est = estimate_vector(g, zero, no_potential, ones, t0, paths, seed);
        Real gap = 0.0;
        for (Index p = 0; p < n; ++p) {
            gap = std::max(gap, std::abs(est.means[p] - Complex{1.0, 0.0}));
            gap = std::max(gap, est.stderr_at(p));
        }
        push("fki-conservative", gap, 0.0);
    }

    {
        RngStream rng(seed, 9008);
        const ComplexVector f = detail::random_complex_vector(rng, n);
        std::size_t total = 0;
        std::size_t failures = 0;
        for (const Real t : run.t_grid) {
            const SemigroupEstimate est = estimate_vector(g, a, v, f, t, run.num_paths, seed + 1);
            const Vector z = compare_exact(est, op, f);
            for (Index p = 0; p < n; ++p) {
                ++total;
                if (z[p] > 4.0) ++failures;
            }
        }
        push("fki-exact-z", static_cast<Real>(failures) / static_cast<Real>(total), 0.05);
    }

    {
        RngStream rng(seed, 9009);
        const ComplexVector f = detail::random_complex_vector(rng, n);
        const ComplexVector h = detail::random_complex_vector(rng, n);
        const SymmetryCheck check = symmetry_test(g, a, v, f, h, t0, run.num_paths, seed + 2);
        push("symmetry-z", check.z, 4.0);
    }

    {
        EdgeFunction phi(g);
        phi.values().setConstant(Complex{1.0, 0.0});
        const LevyCheck check = levy_system_estimate(g, phi, t0, run.num_paths, seed + 3);
        push("levy-z", std::abs(check.z), 4.0);
    }

    {
        const ChainSampler sampler(g);
        const Real mass = sampler.total_mass();
        std::vector<Real> samples(run.num_paths);
        JumpPath path;
        for (std::size_t i = 0; i < run.num_paths; ++i) {
            RngStream stream(seed + 4, i);
            sampler.sample_into(path, sampler.draw_start(stream), t0, stream, i);
            const Real m = martingale_part(path, a);
            samples[i] = mass * m * m;
        }
        const MeanEstimate stats = batch_mean_estimate(samples);
        const Real truth = 2.0 * t0 * form_norm_squared(a);
        push("martingale-energy-z", z_score(stats.mean, truth, stats.stderr_mean), 4.0);
    }

    return results;
}

// ============================================================================
// Commands
// ============================================================================

namespace detail {

inline int cmd_hamiltonian(const ProblemInstance& inst, const Vector& v, const std::filesystem::path& dir) {
    const MagneticOperator op = assemble(inst.graph(), inst.vector_potential(), v);
    const ComplexMatrix& h = op.matrix();
    CsvBuilder csv("p,q,re,im");
    const Index n = inst.graph().num_vertices();
    for (Index p = 0; p < n; ++p) {
        for (Index q = 0; q < n; ++q) {
            if (p != q && h(p, q) == Complex{0.0, 0.0}) continue;
            csv.row(p, q, h(p, q).real(), h(p, q).imag());
        }
    }
    write_text_file(dir, "hamiltonian.csv", csv.str());
    return 0;
}

inline int cmd_spectrum(const ProblemInstance& inst, const Vector& v, const std::filesystem::path& dir) {
    const MagneticOperator op = assemble(inst.graph(), inst.vector_potential(), v);
    const Vector lambda = spectrum(op);
    CsvBuilder csv("k,value");
    for (Eigen::Index k = 0; k < lambda.size(); ++k) csv.row(k, lambda[k]);
    write_text_file(dir, "spectrum.csv", csv.str());
    return 0;
}

inline int cmd_semigroup(const ProblemInstance& inst, const Vector& v, const RunParameters& run,
                         const std::filesystem::path& dir) {
    const MagneticOperator op = assemble(inst.graph(), inst.vector_potential(), v);
    const Index n = inst.graph().num_vertices();
    CsvBuilder csv("t,p,q,re,im");
    for (const Real t : run.t_grid) {
        const ComplexMatrix kernel = semigroup_matrix(op, t);
        for (Index p = 0; p < n; ++p) {
            for (Index q = 0; q < n; ++q) csv.row(t, p, q, kernel(p, q).real(), kernel(p, q).imag());
        }
    }
    write_text_file(dir, "semigroup.csv", csv.str());
    return 0;
}

inline int cmd_simulate(const ProblemInstance& inst, const RunParameters& run,
                        const std::filesystem::path& dir, std::ostream& out) {
    const std::uint64_t seed = resolve_seed(run);
    const Real horizon = run.t_grid.front();
    const ChainSampler sampler(inst.graph());
    std::vector<JumpPath> paths(run.num_paths);
    std::size_t events = 0;
    for (std::size_t i = 0; i < run.num_paths; ++i) {
        RngStream rng(seed, i);
        sampler.sample_into(paths[i], sampler.draw_start(rng), horizon, rng, i);
        events += paths[i].events.size();
    }
    write_text_file(dir, "paths.csv", emit_paths_csv(paths));
    out << "simulated " << run.num_paths << " paths over [0, " << horizon << "], " << events
        << " events total\n";
    return 0;
}

inline int cmd_fki(const ProblemInstance& inst, const Vector& v, const RunParameters& run,
                   const std::filesystem::path& dir, std::ostream& out) {
    const std::uint64_t seed = resolve_seed(run);
    const WeightedGraph& g = inst.graph();
    const Index n = g.num_vertices();
    const MagneticOperator op = assemble(g, inst.vector_potential(), v);
    const ComplexVector ones = ComplexVector::Constant(n, Complex{1.0, 0.0});
    CsvBuilder csv("t,vertex,mean_re,mean_im,stderr_re,stderr_im,exact_re,exact_im,z");
    std::size_t total = 0;
    std::size_t failures = 0;
    for (const Real t : run.t_grid) {
        const SemigroupEstimate est =
            estimate_vector(g, inst.vector_potential(), v, ones, t, run.num_paths, seed);
        const ComplexVector exact = semigroup_exact(op, t, ones);
        const Vector z = compare_exact(est, op, ones);
        for (Index p = 0; p < n; ++p) {
            csv.row(t, p, est.means[p].real(), est.means[p].imag(), est.stderr_re[p],
                    est.stderr_im[p], exact[p].real(), exact[p].imag(), z[p]);
            ++total;
            if (z[p] > 4.0) ++failures;
        }
    }
    write_text_file(dir, "fki.csv", csv.str());
    const Real rate = static_cast<Real>(failures) / static_cast<Real>(total);
    out << "fki: " << (total - failures) << "/" << total << " vertex estimates within 4 sigma\n";
    return rate <= 0.05 ? 0 : 1;
}

inline int cmd_hodge(const ProblemInstance& inst, const std::filesystem::path& dir,
                     std::ostream& out) {
    const WeightedGraph& g = inst.graph();
    const HodgeResult result = hodge(g, inst.vector_potential());
    CsvBuilder potential("vertex,re,im");
    for (Index p = 0; p < g.num_vertices(); ++p) {
        potential.row(p, result.potential[p].real(), result.potential[p].imag());
    }
    write_text_file(dir, "potential.csv", potential.str());
    CsvBuilder circulation("p,q,re,im");
    const auto& edges = g.edges();
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const Complex value = result.circulation.values()[static_cast<Eigen::Index>(e)];
        circulation.row(edges[e].p, edges[e].q, value.real(), value.imag());
    }
    write_text_file(dir, "circulation.csv", circulation.str());
    out << "hodge: divergence residual " << result.divergence_residual << "\n";
    return 0;
}

inline int cmd_verify(const ProblemInstance& inst, const RunParameters& run,
                      const std::filesystem::path& dir, std::ostream& out) {
    const std::vector<CheckResult> results = run_verify(inst, run);
    CsvBuilder csv("check,gap,tolerance,pass");
    bool all_pass = true;
    std::size_t width = 0;
    for (const auto& r : results) width = std::max(width, r.name.size());
    for (const auto& r : results) {
        csv.row(r.name, r.gap, r.tolerance, r.pass ? 1 : 0);
        out << std::left << std::setw(static_cast<int>(width) + 2) << r.name << std::scientific
            << std::setprecision(3) << std::setw(12) << r.gap << "  (tol " << r.tolerance << ")  "
            << (r.pass ? "PASS" : "FAIL") << "\n";
        all_pass = all_pass && r.pass;
    }
    out.unsetf(std::ios::scientific);
    write_text_file(dir, "verify.csv", csv.str());
    out << (all_pass ? "all checks passed" : "some checks FAILED") << "\n";
    return all_pass ? 0 : 1;
}

} // namespace detail

/// Executes one command against one problem file; returns the exit status.
inline int run_command(const RunOptions& opt, std::ostream& out) {
    ProblemSpec spec;
    try {
        spec = load_problem(opt.spec_path);
    } catch (const std::invalid_argument& e) {
        out << e.what() << "\n";
        return 1;
    }
    ProblemInstance inst(spec);
    if (opt.orientation == "to-from") inst.flip_orientation();

    const auto violations = validate(inst.graph());
    if (opt.command == "validate") {
        if (!violations.empty()) {
            out << "invalid graph:\n";
            for (const auto& v : violations) out << "  - " << v << "\n";
            return 1;
        }
        out << "valid: " << inst.graph().num_vertices() << " vertices, "
            << inst.graph().num_edges() << " edges, total mass " << inst.graph().total_mass()
            << "\n";
        return 0;
    }
    if (!violations.empty()) {
        out << "invalid graph; run the validate command for the listing\n";
        return 1;
    }

    const std::filesystem::path dir(opt.out_dir);
    const Vector& v = inst.scalar_potential();
    if (opt.command == "hamiltonian") return detail::cmd_hamiltonian(inst, v, dir);
    if (opt.command == "spectrum") return detail::cmd_spectrum(inst, v, dir);
    if (opt.command == "semigroup") return detail::cmd_semigroup(inst, v, spec.run, dir);
    if (opt.command == "simulate") return detail::cmd_simulate(inst, spec.run, dir, out);
    if (opt.command == "fki") return detail::cmd_fki(inst, v, spec.run, dir, out);
    if (opt.command == "hodge") return detail::cmd_hodge(inst, dir, out);
    if (opt.command == "verify") return detail::cmd_verify(inst, spec.run, dir, out);
    throw std::invalid_argument("unknown command \"" + opt.command + "\"");
}

} // namespace magjump
