// qckt: simplify, verify and inspect dressed-CNOT circuits.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "qckt/qckt.hpp"

namespace {

using json = nlohmann::ordered_json;
using namespace qckt;

// exit codes: 0 success / equivalent, 1 not-equivalent / not-reduced,
// 2 parse error, 3 numeric failure
enum ExitStatus : int { kOk = 0, kNegative = 1, kParseError = 2, kNumericFailure = 3 };

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(0, "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << text;
}

void print_matrix(const CMat& m) {
    for (int i = 0; i < m.dim(); ++i) {
        for (int j = 0; j < m.dim(); ++j) {
            cplx v = m(i, j);
            std::printf("  (%+.6f%+.6fi)", v.real(), v.imag());
        }
        std::printf("\n");
    }
}

void print_vec(const char* name, Vec3 v) {
    std::printf("%s = (% .12f, % .12f, % .12f)\n", name, v.x, v.y, v.z);
}

int cmd_simplify(const std::string& in_path, const std::string& out_path, double tol,
                 int max_iter, bool verify, const std::string& report_fmt) {
    Circuit c;
    try {
        c = parse(read_file(in_path));
    } catch (const ParseError& e) {
        std::cerr << in_path << ": " << e.what() << "\n";
        return kParseError;
    }
    OptimizeConfig cfg;
    cfg.max_iter = max_iter;
    if (tol > 0) cfg.verify_tol_scale = tol;
    auto [out, report] = optimize(c, cfg);
    if (!out_path.empty()) write_file(out_path, serialize(out));

    if (report_fmt == "json") {
        json j;
        j["initial_dcnot_count"] = report.initial_dcnot_count;
        j["final_dcnot_count"] = report.final_dcnot_count;
        json passes = json::array();
        for (const auto& [rule, pos] : report.passes_applied)
            passes.push_back(json{{"rule", rule}, {"position", pos}});
        j["passes_applied"] = passes;
        j["total_residual"] = report.total_residual;
        j["verified"] = report.verified;
        j["no_solution_found_count"] = report.no_solution_found_count;
        std::cout << j.dump(2) << "\n";
    } else {
        std::printf("initial_dcnot_count: %d\n", report.initial_dcnot_count);
        std::printf("final_dcnot_count: %d\n", report.final_dcnot_count);
        std::printf("passes_applied: %zu\n", report.passes_applied.size());
        for (const auto& [rule, pos] : report.passes_applied)
            std::printf("  %s at %d\n", rule.c_str(), pos);
        std::printf("total_residual: %.3e\n", report.total_residual);
        std::printf("verified: %s\n", report.verified ? "true" : "false");
        std::printf("no_solution_found_count: %d\n", report.no_solution_found_count);
    }
    if (verify && !report.verified) return kNumericFailure;
    if (report.no_solution_found_count > 0) return kNegative;
    return kOk;
}

int cmd_verify(const std::string& a_path, const std::string& b_path, const std::string& mode) {
    Circuit a, b;
    try {
        a = parse(read_file(a_path));
        b = parse(read_file(b_path));
    } catch (const ParseError& e) {
        std::cerr << e.what() << "\n";
        return kParseError;
    }
    if (a.nbits != b.nbits) {
        std::cerr << "dimension mismatch: NBITS " << a.nbits << " vs " << b.nbits << "\n";
        return kParseError;
    }
    CMat ua = circuit_unitary(a), ub = circuit_unitary(b);
    bool equivalent = false;
    if (mode == "exact") {
        cplx t = (ub.adjoint() * ua).trace();
        double zeta = std::abs(t) > 1e-12 ? std::arg(t) : 0.0;
        equivalent = frob_dist(ua, std::polar(1.0, zeta) * ub) <= 1e-8 * ua.dim();
    } else if (a.nbits == 2) {
        equivalent = lo_rhs_equivalent(ua, ub).first;
    } else if (a.nbits == 3) {
        equivalent = factor_tensor_product(ua.adjoint() * ub, 3).ok;
    } else {
        // single qubit: any two unitaries differ by a local operation
        equivalent = true;
    }
    std::printf("%s\n", equivalent ? "equivalent" : "not-equivalent");
    return equivalent ? kOk : kNegative;
}

int cmd_invariant(const std::string& in_path, bool diagonalize) {
    Circuit c;
    try {
        c = parse(read_file(in_path));
    } catch (const ParseError& e) {
        std::cerr << e.what() << "\n";
        return kParseError;
    }
    if (c.nbits != 2) {
        std::cerr << "invariant inspection needs a 2-qubit circuit\n";
        return kParseError;
    }
    CMat u = circuit_unitary(c);
    CMat inv = quad_invariant(u, 2);
    std::printf("A^(2):\n");
    print_matrix(inv);
    InvariantParts parts = split_parts(inv);
    std::printf("lam_r = % .12f\nlam_i = % .12f\n", parts.lam_r, parts.lam_i);
    std::printf("Lam_r:\n");
    print_matrix(parts.Lam_r);
    std::printf("Lam_i:\n");
    print_matrix(parts.Lam_i);
    if (!diagonalize) return kOk;

    try {
        DiagG2Result g2 = diagonalize_g2(inv);
        std::printf("shape: 2 DC-NOTs\n");
        std::printf("alpha = % .12f\nalpha_prime = % .12f\n", g2.params.alpha,
                    g2.params.alpha_prime);
        print_vec("a ", g2.a.vec());
        print_vec("b ", g2.b.vec());
        print_vec("a'", g2.a_prime.vec());
        print_vec("b'", g2.b_prime.vec());
        std::printf("residual = %.3e\n", g2.residual);
        return kOk;
    } catch (const std::runtime_error&) {
        // fall through to the 3-DC-NOT shape
    }
    try {
        DiagG3Result g3 = diagonalize_g3(inv);
        std::printf("shape: 3 DC-NOTs\n");
        std::printf("beta = % .12f\nbeta1 = % .12f\nbeta2 = % .12f\nxi = %d\n", g3.params.beta,
                    g3.params.beta1, g3.params.beta2, g3.params.xi);
        std::printf("Xo = % .12f\nYo = % .12f\n", g3.params.Xo, g3.params.Yo);
        std::printf("nu = (% .12f, % .12f, % .12f)\n", g3.params.nu[0], g3.params.nu[1],
                    g3.params.nu[2]);
        std::printf("mu = (% .12f, % .12f, % .12f)\n", g3.params.mu[0], g3.params.mu[1],
                    g3.params.mu[2]);
        print_vec("a ", g3.a.vec());
        print_vec("b ", g3.b.vec());
        print_vec("c ", g3.c.vec());
        print_vec("a'", g3.a_prime.vec());
        print_vec("b'", g3.b_prime.vec());
        print_vec("c'", g3.c_prime.vec());
        std::printf("residual = %.3e\n", g3.residual);
        return kOk;
    } catch (const std::runtime_error& e) {
        std::printf("not a 2- or 3-DC-NOT invariant shape\n");
        std::printf("detail: %s\n", e.what());
        return kNumericFailure;
    }
}

int cmd_random(int nbits, int dcnots, std::uint64_t seed, const std::string& out_path) {
    if (nbits < 1 || nbits > 3 || dcnots < 0 || (nbits < 2 && dcnots > 0)) {
        std::cerr << "invalid counts: nbits must be 1..3 (and >= 2 for any DC-NOTs)\n";
        return kParseError;
    }
    Circuit c = random_dcnot_circuit(seed, nbits, dcnots);
    std::string text = serialize(c);
    if (out_path.empty())
        std::cout << text;
    else
        write_file(out_path, text);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dressed-CNOT circuit toolkit"};
    app.require_subcommand(1);

    std::string in_path, out_path, a_path, b_path;
    std::string mode = "lo-rhs", report_fmt = "text";
    double tol = 0;
    int max_iter = 64, nbits = 2, dcnots = 4;
    std::uint64_t seed = 0;
    bool verify = false, diagonalize = false;

    CLI::App* simplify = app.add_subcommand("simplify", "shrink the DC-NOT count of a circuit");
    simplify->add_option("input", in_path, "circuit file")->required();
    simplify->add_option("-o,--output", out_path, "write the simplified circuit here");
    simplify->add_option("--tol", tol, "end-to-end verification tolerance scale");
    simplify->add_option("--max-iter", max_iter, "fixpoint iteration cap");
    simplify->add_flag("--verify", verify, "fail (exit 3) unless the end-to-end check passes");
    simplify->add_option("--report", report_fmt, "report format: text|json")
        ->check(CLI::IsMember({"text", "json"}));

    CLI::App* verify_cmd = app.add_subcommand("verify", "compare two circuits");
    verify_cmd->add_option("a", a_path, "first circuit file")->required();
    verify_cmd->add_option("b", b_path, "second circuit file")->required();
    verify_cmd->add_option("--mode", mode, "lo-rhs|exact")
        ->check(CLI::IsMember({"lo-rhs", "exact"}));

    CLI::App* invariant = app.add_subcommand("invariant", "print the quadratic invariant");
    invariant->add_option("input", in_path, "circuit file")->required();
    invariant->add_flag("--diagonalize", diagonalize,
                        "recover principal parameters and defining vectors");

    CLI::App* random_cmd = app.add_subcommand("random", "generate a seeded random circuit");
    random_cmd->add_option("--nbits", nbits, "wire count (1..3)");
    random_cmd->add_option("--dcnots", dcnots, "DC-NOT count");
    random_cmd->add_option("--seed", seed, "generator seed");
    random_cmd->add_option("-o,--output", out_path, "output file (stdout if omitted)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (simplify->parsed())
            return cmd_simplify(in_path, out_path, tol, max_iter, verify, report_fmt);
        if (verify_cmd->parsed()) return cmd_verify(a_path, b_path, mode);
        if (invariant->parsed()) return cmd_invariant(in_path, diagonalize);
        if (random_cmd->parsed()) return cmd_random(nbits, dcnots, seed, out_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumericFailure;
    }
    return kOk;
}
