// Command-line front end: every subcommand reads one problem JSON file and
// writes CSV results; exit status 0 means all executed checks passed, 1 means
// a validation or check failure, 2 means the invocation itself was unusable.

#include <exception>
#include <iostream>
#include <set>
#include <string>

#include <CLI11.hpp>

#include "magjump/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"magnetic jump-process verification engine"};
    app.require_subcommand(1);

    magjump::RunOptions opt;
    const std::set<std::string> orientations{"from-to", "to-from"};

    const auto add = [&](const std::string& name, const std::string& help) {
        CLI::App* cmd = app.add_subcommand(name, help);
        cmd->add_option("spec", opt.spec_path, "problem JSON file")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--out", opt.out_dir, "output directory (default: current)");
        cmd->add_option("--orientation", opt.orientation,
                        "line-integral increment convention: from-to or to-from")
            ->check(CLI::IsMember(orientations));
        return cmd;
    };

    add("validate", "check the problem file and graph, list every violation");
    add("hamiltonian", "write the magnetic Hamiltonian matrix (hamiltonian.csv)");
    add("spectrum", "write the eigenvalues in ascending order (spectrum.csv)");
    add("semigroup", "write the heat kernel e^{-tH} over the run's t grid (semigroup.csv)");
    add("simulate", "sample jump paths from the stationary start (paths.csv)");
    add("fki", "Monte Carlo semigroup estimates vs the exact kernel (fki.csv)");
    add("hodge", "split the vector potential into gradient + circulation parts");
    add("verify", "run the full invariant suite and report each check (verify.csv)");

    CLI11_PARSE(app, argc, argv);
    opt.command = app.get_subcommands().front()->get_name();

    try {
        return magjump::run_command(opt, std::cout);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
