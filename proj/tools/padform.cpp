// Command-line front end: generate, solve, verify and profile instances of
// pairs of additive forms of degree k = p^tau (p-1).
//
// Exit codes: 0 success, 1 I/O or internal error, 2 out of scope
// (hypotheses unmet), 3 degenerate pair (theta = 0), 4 verification failed.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "padform/io.hpp"
#include "padform/oracle.hpp"
#include "padform/solver.hpp"

namespace {

int fail(int code, const std::string& msg) {
    std::cerr << "padform: " << msg << "\n";
    return code;
}

padform::FormPair load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw padform::ParseError("cannot open instance file: " + path);
    return padform::parse_instance(in);
}

int cmd_solve(const std::string& instance_path, long precision, const std::string& out_path,
              bool run_oracle, bool emit_log, bool /*seedless_normalise*/) {
    padform::FormPair fp;
    try {
        fp = load_instance(instance_path);
    } catch (const std::exception& e) {
        return fail(1, e.what());
    }
    try {
        auto sol = padform::solve(fp, precision);
        std::ostringstream body;
        padform::serialize_solution(sol, fp.P.p, fp.P.tau, body);
        if (out_path.empty()) {
            std::cout << body.str();
        } else {
            std::ofstream out(out_path);
            if (!out) return fail(1, "cannot open output file: " + out_path);
            out << body.str();
        }
        if (emit_log)
            for (const auto& l : sol.strategy_log) std::cerr << "log: " << l << "\n";
        if (run_oracle) {
            auto orc = padform::dp_nonsingular_search(fp);
            if (orc.capacity_exceeded) {
                std::cerr << "oracle: capacity exceeded for these parameters\n";
            } else if (!orc.found) {
                return fail(1, "oracle disagrees: no independent witness found");
            } else {
                std::cerr << "oracle: agrees (witness of size " << orc.witness.size() << ")\n";
            }
        }
        return 0;
    } catch (const padform::DegeneratePair& e) {
        return fail(3, e.what());
    } catch (const padform::OutsideHypotheses& e) {
        return fail(2, e.what());
    } catch (const padform::CertificateUnavailable& e) {
        return fail(2, e.what());
    } catch (const std::exception& e) {
        return fail(1, e.what());
    }
}

int cmd_gen(unsigned long p, long tau, std::uint64_t seed, long slack, const std::string& hint,
            const std::string& out_path) {
    try {
        auto fp = padform::generate_instance(p, tau, seed, slack, hint);
        if (out_path.empty()) {
            padform::serialize_instance(fp, std::cout);
        } else {
            std::ofstream out(out_path);
            if (!out) return fail(1, "cannot open output file: " + out_path);
            padform::serialize_instance(fp, out);
        }
        return 0;
    } catch (const padform::OutsideHypotheses& e) {
        return fail(2, e.what());
    } catch (const std::exception& e) {
        return fail(1, e.what());
    }
}

int cmd_verify(const std::string& instance_path, const std::string& solution_path) {
    padform::FormPair fp;
    padform::SolutionFile sf;
    try {
        fp = load_instance(instance_path);
        std::ifstream in(solution_path);
        if (!in) return fail(1, "cannot open solution file: " + solution_path);
        sf = padform::parse_solution(in);
    } catch (const std::exception& e) {
        return fail(1, e.what());
    }
    if (sf.p != fp.P.p || sf.tau != fp.P.tau)
        return fail(4, "verification failed: parameter mismatch between files");
    if (static_cast<long>(sf.values.size()) != fp.s())
        return fail(4, "verification failed: value count differs from variable count");
    auto chk = padform::verify_nonsingular(fp, sf.values, sf.N);
    if (!chk.ok) return fail(4, "verification failed: " + chk.reason);
    // the claimed pair itself must have unit determinant mod p
    if (sf.ns_i < 0 || sf.ns_j < 0 || sf.ns_i >= fp.s() || sf.ns_j >= fp.s())
        return fail(4, "verification failed: nonsingular indices out of range");
    const unsigned long p = fp.P.p;
    auto col = [&](int i, const padform::Int& c) {
        return (c.mod_ui(p) * sf.values[i].mod_ui(p)) % p;
    };
    unsigned long ai = col(sf.ns_i, fp.coeffs[sf.ns_i].first);
    unsigned long bi = col(sf.ns_i, fp.coeffs[sf.ns_i].second);
    unsigned long aj = col(sf.ns_j, fp.coeffs[sf.ns_j].first);
    unsigned long bj = col(sf.ns_j, fp.coeffs[sf.ns_j].second);
    if ((ai * bj % p + p - aj * bi % p) % p == 0)
        return fail(4, "verification failed: claimed nonsingular pair has zero determinant mod p");
    return 0;
}

int cmd_profile(const std::string& instance_path) {
    padform::FormPair fp;
    try {
        fp = load_instance(instance_path);
    } catch (const std::exception& e) {
        return fail(1, e.what());
    }
    try {
        if (padform::is_degenerate(fp)) return fail(3, "degenerate pair: theta(f,g) = 0");
        auto norm = padform::p_normalise(fp);
        std::cout << "normalisation steps: " << norm.record.steps.size() << "\n";
        padform::print_profile(norm.pair, std::cout);
        return 0;
    } catch (const padform::DegeneratePair& e) {
        return fail(3, e.what());
    } catch (const std::exception& e) {
        return fail(1, e.what());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"solver for pairs of additive forms of degree p^tau (p-1) over Q_p"};
    app.require_subcommand(1);

    auto* solve = app.add_subcommand("solve", "solve an instance and print the certificate");
    std::string instance_path, out_path;
    long precision = 6;
    bool with_oracle = false, with_log = false, seedless = false;
    solve->add_option("instance", instance_path, "instance file")->required();
    solve->add_option("--precision", precision, "certificate precision N (default 6)");
    solve->add_option("-o,--output", out_path, "write the solution file here");
    solve->add_flag("--oracle", with_oracle, "cross-check with the DP oracle");
    solve->add_flag("--log", with_log, "emit the strategy log on stderr");
    solve->add_flag("--seedless-normalise", seedless,
                    "use the deterministic normalisation order (always on)");

    auto* gen = app.add_subcommand("gen", "generate a deterministic instance");
    unsigned long p = 5;
    long tau = 1, slack = 1;
    std::uint64_t seed = 1;
    std::string hint, gen_out;
    gen->add_option("--p", p, "prime p >= 5")->required();
    gen->add_option("--tau", tau, "exponent tau >= 1")->required();
    gen->add_option("--seed", seed, "random seed (default 1)");
    gen->add_option("--slack", slack, "s = 2k^2 + slack (default 1)");
    gen->add_option("--hint", hint, "branch hint (e.g. r=-1, L37, L38rm1big, L40..L46)");
    gen->add_option("-o,--output", gen_out, "write the instance file here");

    auto* verify = app.add_subcommand("verify", "check a solution file against an instance");
    std::string v_instance, v_solution;
    verify->add_option("instance", v_instance, "instance file")->required();
    verify->add_option("solution", v_solution, "solution file")->required();

    auto* profile = app.add_subcommand("profile", "print the normalised level/colour profile");
    std::string p_instance;
    profile->add_option("instance", p_instance, "instance file")->required();

    CLI11_PARSE(app, argc, argv);

    if (solve->parsed())
        return cmd_solve(instance_path, precision, out_path, with_oracle, with_log, seedless);
    if (gen->parsed()) return cmd_gen(p, tau, seed, slack, hint, gen_out);
    if (verify->parsed()) return cmd_verify(v_instance, v_solution);
    if (profile->parsed()) return cmd_profile(p_instance);
    return 1;
}
