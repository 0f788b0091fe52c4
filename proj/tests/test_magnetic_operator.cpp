#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "magjump/magnetic_operator.hpp"
#include "test_support.hpp"

using namespace magjump;
using Catch::Approx;

namespace {

constexpr Real kPi = std::numbers::pi;

OneForm pi_form(const WeightedGraph& g) {
    OneForm a(g);
    a.set(0, 1, Complex{kPi, 0.0});
    return a;
}

/// a(p,q) lookup for the double-sum oracle, zero off the edge set.
auto phase_lookup(const WeightedGraph& g, const OneForm& a) {
    return [&g, &a](Index p, Index q) -> Real {
        return g.weight(p, q) > 0.0 ? a(p, q).real() : 0.0;
    };
}

} // namespace

TEST_CASE("magnetic energy", "[magnetic][energy]") {
    SECTION("free case equals the Dirichlet form") {
        auto g = testsupport::random_graph(101, 9, 0.5);
        RngStream rng(101, 0);
        const auto f = testsupport::random_complex_vector(rng, 9);
        const auto h = testsupport::random_complex_vector(rng, 9);
        const Complex lhs = magnetic_energy(g, OneForm(g), Vector::Zero(9), f, h);
        const Complex rhs = dirichlet_energy(g, f, h);
        REQUIRE(std::abs(lhs - rhs) <= 1e-13 * (1.0 + std::abs(rhs)));
    }
    SECTION("frozen: two vertices, half-turn phase, constant function") {
        auto g = testsupport::two_vertex_graph();
        ComplexVector f = ComplexVector::Constant(2, Complex{1.0, 0.0});
        const Real e = magnetic_energy(g, pi_form(g), Vector::Zero(2), f);
        REQUIRE(e == Approx(8.0).epsilon(1e-13));
    }
    SECTION("matches the ordered-pair double sum and is conjugate symmetric") {
        for (std::uint64_t seed : {103, 104, 105}) {
            auto g = testsupport::random_graph(seed, 8, 0.5);
            RngStream rng(seed, 1);
            OneForm a = testsupport::random_one_form(rng, g, 2.0);
            const Vector v = testsupport::random_real_vector(rng, 8, -1.0, 2.0);
            const auto f = testsupport::random_complex_vector(rng, 8);
            const auto h = testsupport::random_complex_vector(rng, 8);

            const Complex lib = magnetic_energy(g, a, v, f, h);
            const Complex oracle =
                testsupport::magnetic_double_sum(g, phase_lookup(g, a), v, f, h);
            REQUIRE(std::abs(lib - oracle) <= 1e-12 * (1.0 + std::abs(oracle)));

            const Complex swapped = magnetic_energy(g, a, v, h, f);
            REQUIRE(std::abs(lib - std::conj(swapped)) <= 1e-12 * (1.0 + std::abs(lib)));

            const Real diag = magnetic_energy(g, a, v, f);
            REQUIRE(std::abs(Complex{diag, 0.0} - magnetic_energy(g, a, v, f, f)) <=
                    1e-12 * (1.0 + std::abs(diag)));
        }
    }
}

TEST_CASE("operator assembly", "[magnetic][assemble]") {
    SECTION("free two-vertex operator is -L") {
        auto g = testsupport::two_vertex_graph();
        auto op = assemble_free(g);
        ComplexMatrix expected(2, 2);
        expected << Complex{2.0, 0.0}, Complex{-2.0, 0.0}, Complex{-2.0, 0.0}, Complex{2.0, 0.0};
        REQUIRE((op.matrix() - expected).cwiseAbs().maxCoeff() == 0.0);
        REQUIRE(op.eigenvalues()[0] == Approx(0.0).margin(1e-13));
        REQUIRE(op.eigenvalues()[1] == Approx(4.0).epsilon(1e-13));
    }
    SECTION("half-turn phase flips the coupling sign") {
        auto g = testsupport::two_vertex_graph();
        auto op = assemble(g, pi_form(g), Vector::Zero(2));
        ComplexMatrix expected(2, 2);
        expected << Complex{2.0, 0.0}, Complex{2.0, 0.0}, Complex{2.0, 0.0}, Complex{2.0, 0.0};
        REQUIRE((op.matrix() - expected).cwiseAbs().maxCoeff() <= 1e-15);
        REQUIRE(op.eigenvalues()[0] == Approx(0.0).margin(1e-12));
        REQUIRE(op.eigenvalues()[1] == Approx(4.0).epsilon(1e-12));
    }
    SECTION("mu-weighted Hermiticity") {
        auto g = testsupport::random_graph(111, 10, 0.5);
        RngStream rng(111, 2);
        OneForm a = testsupport::random_one_form(rng, g, 3.0);
        const Vector v = testsupport::random_real_vector(rng, 10, -0.5, 1.5);
        auto op = assemble(g, a, v);
        const auto& h = op.matrix();
        const Real scale = h.cwiseAbs().maxCoeff();
        for (Index p = 0; p < 10; ++p) {
            for (Index q = 0; q < 10; ++q) {
                const Complex lhs = h(p, q) * g.mu(p);
                const Complex rhs = std::conj(h(q, p)) * g.mu(q);
                REQUIRE(std::abs(lhs - rhs) <= 1e-13 * (1.0 + scale));
            }
        }
        REQUIRE(op.negative_part_bound() >= 0.0);
    }
    SECTION("non-real potential is rejected") {
        auto g = testsupport::two_vertex_graph();
        OneForm a(g);
        a.set(0, 1, Complex{0.0, 1.0});
        REQUIRE_THROWS_AS(assemble(g, a, Vector::Zero(2)), std::invalid_argument);
    }
    SECTION("eigenvectors are mu-orthonormal") {
        auto g = testsupport::random_graph(112, 8, 0.5);
        RngStream rng(112, 3);
        auto op = assemble(g, testsupport::random_one_form(rng, g), Vector::Zero(8));
        for (Index i = 0; i < 8; ++i) {
            for (Index j = 0; j < 8; ++j) {
                const Complex dot =
                    op.mu_inner(op.eigenvectors().col(i), op.eigenvectors().col(j));
                REQUIRE(std::abs(dot - (i == j ? Complex{1.0, 0.0} : Complex{0.0, 0.0})) <= 1e-12);
            }
        }
    }
}

TEST_CASE("cycle spectra against the plane-wave closed form", "[magnetic][spectrum]") {
    for (Index n : {3, 4, 6, 8}) {
        for (Real phi : {0.0, kPi / 3.0, kPi / 2.0, kPi}) {
            auto g = testsupport::cycle_graph(n);
            auto op = assemble(g, testsupport::cycle_flux_form(g, phi), Vector::Zero(n));
            const auto expected = testsupport::cycle_flux_spectrum(n, phi);
            const Vector s = spectrum(op);
            for (Index k = 0; k < n; ++k) {
                REQUIRE(s[k] == Approx(expected[static_cast<std::size_t>(k)]).margin(1e-10));
            }
        }
    }
    SECTION("frozen 4-cycle quarter-turn spectrum") {
        auto g = testsupport::cycle_graph(4);
        auto op = assemble(g, testsupport::cycle_flux_form(g, kPi / 2.0), Vector::Zero(4));
        const Vector s = spectrum(op);
        REQUIRE(s[0] == Approx(0.0).margin(1e-10));
        REQUIRE(s[1] == Approx(4.0).margin(1e-10));
        REQUIRE(s[2] == Approx(4.0).margin(1e-10));
        REQUIRE(s[3] == Approx(8.0).margin(1e-10));
    }
}

TEST_CASE("operator and form agree", "[magnetic][form]") {
    SECTION("constants in the free case") {
        auto g = testsupport::cycle_graph(5);
        auto op = assemble_free(g);
        ComplexVector f = ComplexVector::Constant(5, Complex{2.0, 1.0});
        auto check = quadratic_form_check(op, f, f);
        REQUIRE(std::abs(check.lhs) <= 1e-13);
        REQUIRE(std::abs(check.rhs) <= 1e-13);
    }
    SECTION("frozen two-vertex half-turn value 8") {
        auto g = testsupport::two_vertex_graph();
        auto op = assemble(g, pi_form(g), Vector::Zero(2));
        ComplexVector f = ComplexVector::Constant(2, Complex{1.0, 0.0});
        auto check = quadratic_form_check(op, f, f);
        REQUIRE(check.lhs.real() == Approx(8.0).epsilon(1e-12));
        REQUIRE(check.gap <= 1e-12 * (1.0 + std::abs(check.lhs)));
    }
    SECTION("random instances") {
        for (std::uint64_t seed : {121, 122, 123, 124}) {
            auto g = testsupport::random_graph(seed, 8, 0.5);
            RngStream rng(seed, 4);
            auto op = assemble(g, testsupport::random_one_form(rng, g, 2.0),
                               testsupport::random_real_vector(rng, 8, -1.0, 2.0));
            const auto f = testsupport::random_complex_vector(rng, 8);
            const auto h = testsupport::random_complex_vector(rng, 8);
            auto check = quadratic_form_check(op, f, h);
            REQUIRE(check.gap <= 1e-11 * (1.0 + std::abs(check.lhs)));

            // the diagonal is real: <Hf,f>_mu has vanishing imaginary part
            auto diag = quadratic_form_check(op, f, f);
            REQUIRE(std::abs(diag.lhs.imag()) <= 1e-12 * (1.0 + std::abs(diag.lhs)));
        }
    }
}

TEST_CASE("exact semigroup", "[magnetic][semigroup]") {
    auto g = testsupport::random_graph(131, 9, 0.5);
    RngStream rng(131, 5);
    OneForm a = testsupport::random_one_form(rng, g, 1.5);
    const Vector v = testsupport::random_real_vector(rng, 9, -0.5, 1.0);
    auto op = assemble(g, a, v);
    const auto f = testsupport::random_complex_vector(rng, 9);

    SECTION("t = 0 is the identity") {
        REQUIRE((semigroup_exact(op, 0.0, f) - f).cwiseAbs().maxCoeff() <= 1e-12);
    }
    SECTION("negative time is rejected") {
        REQUIRE_THROWS_AS(semigroup_exact(op, -0.1, f), std::invalid_argument);
    }
    SECTION("semigroup law at t = s = 0.3") {
        const ComplexVector two_step = semigroup_exact(op, 0.3, semigroup_exact(op, 0.3, f));
        const ComplexVector one_step = semigroup_exact(op, 0.6, f);
        REQUIRE((two_step - one_step).cwiseAbs().maxCoeff() <= 1e-10);
    }
    SECTION("matches series summation of the matrix exponential") {
        for (Real t : {0.1, 1.0}) {
            const ComplexMatrix viaEigen = semigroup_matrix(op, t);
            const ComplexMatrix viaSeries = testsupport::expm_series(ComplexMatrix(-t * op.matrix()));
            REQUIRE((viaEigen - viaSeries).cwiseAbs().maxCoeff() <= 1e-11);
            REQUIRE((viaEigen.cast<Complex>() * f - semigroup_exact(op, t, f)).cwiseAbs().maxCoeff() <=
                    1e-11);
        }
    }
    SECTION("long-time limit is the componentwise mu-mean in the free case") {
        auto free_op = assemble_free(g);
        const ComplexVector limit = semigroup_exact(free_op, 200.0, f);
        Complex mean{0.0, 0.0};
        Real mass = 0.0;
        for (Index p = 0; p < 9; ++p) {
            mean += f[p] * g.mu(p);
            mass += g.mu(p);
        }
        mean /= mass;
        for (Index p = 0; p < 9; ++p) REQUIRE(std::abs(limit[p] - mean) <= 1e-10);
    }
    SECTION("L2 growth bound via the negative part of v") {
        for (Real t : {0.1, 0.7, 2.0}) {
            const ComplexVector ft = semigroup_exact(op, t, f);
            const Real lhs = std::sqrt(op.mu_inner(ft, ft).real());
            const Real rhs =
                std::exp(t * op.negative_part_bound()) * std::sqrt(op.mu_inner(f, f).real());
            REQUIRE(lhs <= rhs * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("spectrum behavior", "[magnetic][spectrum]") {
    SECTION("constant scalar shift moves every eigenvalue") {
        auto g = testsupport::random_graph(141, 7, 0.5);
        RngStream rng(141, 6);
        OneForm a = testsupport::random_one_form(rng, g);
        auto base = assemble(g, a, Vector::Zero(7));
        auto shifted = assemble(g, a, Vector::Constant(7, 0.75));
        for (Index k = 0; k < 7; ++k) {
            REQUIRE(shifted.eigenvalues()[k] ==
                    Approx(base.eigenvalues()[k] + 0.75).margin(1e-11));
        }
    }
    SECTION("spectrum is invariant under sign reversal of a") {
        auto g = testsupport::random_graph(142, 8, 0.5);
        RngStream rng(142, 7);
        OneForm a = testsupport::random_one_form(rng, g, 2.5);
        auto plus = assemble(g, a, Vector::Zero(8));
        auto minus = assemble(g, -a, Vector::Zero(8));
        REQUIRE((spectrum(plus) - spectrum(minus)).cwiseAbs().maxCoeff() <= 1e-10);
        REQUIRE((plus.matrix() - minus.matrix().conjugate()).cwiseAbs().maxCoeff() <= 1e-14);
    }
    SECTION("eigenvalues are nonnegative for v >= 0 and ascending") {
        auto g = testsupport::random_graph(143, 9, 0.5);
        RngStream rng(143, 8);
        auto op = assemble(g, testsupport::random_one_form(rng, g),
                           testsupport::random_real_vector(rng, 9, 0.0, 1.0));
        const Vector s = spectrum(op);
        REQUIRE(s[0] >= -1e-12);
        for (Index k = 1; k < 9; ++k) REQUIRE(s[k] >= s[k - 1]);
    }
}

TEST_CASE("gauge covariance", "[magnetic][gauge]") {
    SECTION("constant gauge leaves the operator untouched") {
        auto g = testsupport::cycle_graph(5);
        auto op = assemble(g, testsupport::cycle_flux_form(g, 0.8), Vector::Zero(5));
        auto shifted = gauge_shift(op, Vector::Constant(5, 3.2));
        REQUIRE((op.matrix() - shifted.matrix()).cwiseAbs().maxCoeff() == 0.0);
    }
    SECTION("unitary equivalence H^{a+du} U = U H^{a}") {
        auto g = testsupport::random_graph(151, 8, 0.5);
        RngStream rng(151, 9);
        OneForm a = testsupport::random_one_form(rng, g, 2.0);
        const Vector v = testsupport::random_real_vector(rng, 8, 0.0, 1.0);
        const Vector u = testsupport::random_real_vector(rng, 8, -2.0, 2.0);
        auto op = assemble(g, a, v);
        auto shifted = gauge_shift(op, u);

        REQUIRE((spectrum(op) - spectrum(shifted)).cwiseAbs().maxCoeff() <= 1e-10);

        const auto f = testsupport::random_complex_vector(rng, 8);
        ComplexVector uf(8), u_hf(8);
        for (Index p = 0; p < 8; ++p) uf[p] = std::polar(1.0, u[p]) * f[p];
        const ComplexVector lhs = shifted.apply(uf);
        const ComplexVector hf = op.apply(f);
        for (Index p = 0; p < 8; ++p) u_hf[p] = std::polar(1.0, u[p]) * hf[p];
        REQUIRE((lhs - u_hf).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + u_hf.cwiseAbs().maxCoeff()));

        // moduli of evolved states agree
        const ComplexVector e1 = semigroup_exact(shifted, 0.4, uf);
        const ComplexVector e2 = semigroup_exact(op, 0.4, f);
        for (Index p = 0; p < 8; ++p) {
            REQUIRE(std::abs(e1[p]) == Approx(std::abs(e2[p])).margin(1e-11));
        }
    }
    SECTION("every potential on a tree is gauge-trivial") {
        WeightedGraph tree;
        for (int i = 0; i < 7; ++i) tree.add_vertex(std::to_string(i), 1.0 + 0.1 * i);
        tree.add_edge(Index{0}, Index{1}, 1.0);
        tree.add_edge(Index{0}, Index{2}, 0.5);
        tree.add_edge(Index{1}, Index{3}, 1.5);
        tree.add_edge(Index{1}, Index{4}, 0.7);
        tree.add_edge(Index{2}, Index{5}, 1.1);
        tree.add_edge(Index{2}, Index{6}, 0.9);
        RngStream rng(152, 10);
        OneForm a = testsupport::random_one_form(rng, tree, 3.0);

        // the hodge split certifies exactness: no circulation on a tree
        auto split = hodge(tree, a);
        REQUIRE(split.circulation.values().cwiseAbs().maxCoeff() <= 1e-10);

        auto magnetic = assemble(tree, a, Vector::Zero(7));
        auto free_op = assemble_free(tree);
        REQUIRE((spectrum(magnetic) - spectrum(free_op)).cwiseAbs().maxCoeff() <= 1e-10);
    }
}

TEST_CASE("diamagnetic domination of the semigroup", "[magnetic][diamagnetic]") {
    SECTION("free case: equality for nonnegative f, domination otherwise") {
        auto g = testsupport::random_graph(161, 8, 0.5);
        RngStream rng(161, 11);
        auto op = assemble(g, OneForm(g), testsupport::random_real_vector(rng, 8, 0.0, 1.0));
        Vector pos = testsupport::random_real_vector(rng, 8, 0.1, 2.0);
        REQUIRE(std::abs(diamagnetic_check(op, pos.cast<Complex>(), 0.5)) <= 1e-12);
        const auto f = testsupport::random_complex_vector(rng, 8);
        REQUIRE(diamagnetic_check(op, f, 0.5) <= 1e-12);
    }
    SECTION("frozen strict case: half-turn phase collapses the constant mode") {
        auto g = testsupport::two_vertex_graph();
        auto op = assemble(g, pi_form(g), Vector::Zero(2));
        ComplexVector f = ComplexVector::Constant(2, Complex{1.0, 0.0});

        // e^{-tH^a} f = e^{-4t} f while the free semigroup preserves f
        const ComplexVector evolved = semigroup_exact(op, 1.0, f);
        REQUIRE(std::abs(evolved[0] - Complex{std::exp(-4.0), 0.0}) <= 1e-12);
        REQUIRE(std::abs(evolved[1] - Complex{std::exp(-4.0), 0.0}) <= 1e-12);
        REQUIRE(diamagnetic_check(op, f, 1.0) == Approx(std::exp(-4.0) - 1.0).margin(1e-12));
    }
    SECTION("randomized sweep over coupling, potential and time") {
        for (std::uint64_t seed : {162, 163}) {
            auto g = testsupport::random_graph(seed, 9, 0.5);
            RngStream rng(seed, 12);
            auto op = assemble(g, testsupport::random_one_form(rng, g, 2.0),
                               testsupport::random_real_vector(rng, 9, -0.5, 1.5));
            const auto f = testsupport::random_complex_vector(rng, 9);
            for (Real t : {0.01, 0.1, 1.0, 10.0}) {
                REQUIRE(diamagnetic_check(op, f, t) <= 1e-10);
            }
        }
    }
}

TEST_CASE("diamagnetic energy inequality", "[magnetic][diamagnetic]") {
    SECTION("equality at a = 0 for nonnegative f") {
        auto g = testsupport::random_graph(171, 7, 0.5);
        RngStream rng(171, 13);
        Vector pos = testsupport::random_real_vector(rng, 7, 0.1, 2.0);
        auto check = energy_diamag_check(g, OneForm(g), pos.cast<Complex>());
        REQUIRE(check.holds);
        REQUIRE(check.lhs == Approx(check.rhs).epsilon(1e-12));
    }
    SECTION("complex f at a = 0: modulus contracts energy") {
        auto g = testsupport::random_graph(172, 7, 0.5);
        RngStream rng(172, 14);
        const auto f = testsupport::random_complex_vector(rng, 7);
        auto check = energy_diamag_check(g, OneForm(g), f);
        REQUIRE(check.holds);
        REQUIRE(check.lhs <= dirichlet_energy(g, f) + 1e-12);
    }
    SECTION("frozen strict case") {
        auto g = testsupport::two_vertex_graph();
        ComplexVector f = ComplexVector::Constant(2, Complex{1.0, 0.0});
        auto check = energy_diamag_check(g, pi_form(g), f);
        REQUIRE(check.lhs == 0.0);
        REQUIRE(check.rhs == Approx(8.0).epsilon(1e-13));
        REQUIRE(check.holds);
    }
    SECTION("randomized property") {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            auto g = testsupport::random_graph(1700 + seed, 8, 0.5);
            RngStream rng(seed, 15);
            auto check = energy_diamag_check(g, testsupport::random_one_form(rng, g, 3.0),
                                             testsupport::random_complex_vector(rng, 8));
            REQUIRE(check.holds);
        }
    }
}

TEST_CASE("magnetic energy bound by free energy and form norm", "[magnetic][bound]") {
    SECTION("trivial cases") {
        auto g = testsupport::two_vertex_graph();
        ComplexVector f(2);
        f << Complex{1.0, 0.0}, Complex{-0.5, 0.5};
        auto free_check = energy_bound_check(g, OneForm(g), f);
        REQUIRE(free_check.holds);
        auto zero_check = energy_bound_check(g, pi_form(g), ComplexVector::Zero(2));
        REQUIRE(zero_check.lhs == 0.0);
        REQUIRE(zero_check.holds);
    }
    SECTION("100 randomized trials on 6-vertex graphs") {
        for (std::uint64_t trial = 0; trial < 100; ++trial) {
            auto g = testsupport::random_graph(1800 + trial, 6, 0.5);
            RngStream rng(trial, 16);
            auto check = energy_bound_check(g, testsupport::random_one_form(rng, g, 2.5),
                                            testsupport::random_complex_vector(rng, 6));
            REQUIRE(check.holds);
        }
    }
}

TEST_CASE("semigroup difference quotient recovers the operator", "[magnetic][quotient]") {
    SECTION("free case tends to -Lf") {
        auto g = testsupport::random_graph(181, 7, 0.5);
        RngStream rng(181, 17);
        const auto f = testsupport::random_complex_vector(rng, 7);
        const ComplexVector target = assemble_free(g).apply(f); // -Lf
        const ComplexVector q = generator_quotient(g, OneForm(g), Vector::Zero(7), f, 1e-4);
        REQUIRE((q - target).cwiseAbs().maxCoeff() <= 1e-2 * (1.0 + target.cwiseAbs().maxCoeff()));
    }
    SECTION("frozen two-vertex half-turn instance") {
        auto g = testsupport::two_vertex_graph();
        OneForm a = pi_form(g);
        ComplexVector f(2);
        f << Complex{1.0, 0.0}, Complex{0.3, -0.4};
        const ComplexVector target = assemble(g, a, Vector::Zero(2)).apply(f);
        const ComplexVector q = generator_quotient(g, a, Vector::Zero(2), f, 1e-3);
        REQUIRE((q - target).cwiseAbs().maxCoeff() <=
                1e-2 * (1.0 + target.cwiseAbs().maxCoeff()));
    }
    SECTION("error halves when t halves") {
        for (std::uint64_t seed : {182, 183, 184}) {
            auto g = testsupport::random_graph(seed, 6, 0.6);
            RngStream rng(seed, 18);
            OneForm a = testsupport::random_one_form(rng, g, 1.5);
            const Vector v = testsupport::random_real_vector(rng, 6, 0.0, 1.0);
            const auto f = testsupport::random_complex_vector(rng, 6);
            const ComplexVector target = assemble(g, a, v).apply(f);

            const Real t = 1e-3;
            const Real err_t =
                (generator_quotient(g, a, v, f, t) - target).cwiseAbs().maxCoeff();
            const Real err_half =
                (generator_quotient(g, a, v, f, t / 2.0) - target).cwiseAbs().maxCoeff();
            const Real ratio = err_t / err_half;
            REQUIRE(ratio >= 1.8);
            REQUIRE(ratio <= 2.2);
        }
    }
    SECTION("nonpositive t is rejected") {
        auto g = testsupport::two_vertex_graph();
        REQUIRE_THROWS_AS(
            generator_quotient(g, OneForm(g), Vector::Zero(2), ComplexVector::Zero(2), 0.0),
            std::invalid_argument);
    }
}
