#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "helpers.hpp"
#include "qckt/format.hpp"
#include "qckt/random.hpp"

#ifndef QCKT_CLI_PATH
#error "QCKT_CLI_PATH must point at the built binary"
#endif

namespace {

struct CmdResult {
    int code;
    std::string out;
};

CmdResult run_cli(const std::string& args) {
    std::string tmp = std::string(std::getenv("TMPDIR") ? std::getenv("TMPDIR") : "/tmp") +
                      "/qckt_cli_out.txt";
    std::string cmd = std::string(QCKT_CLI_PATH) + " " + args + " > " + tmp + " 2>&1";
    int status = std::system(cmd.c_str());
    std::ifstream in(tmp);
    std::ostringstream ss;
    ss << in.rdbuf();
    return {WEXITSTATUS(status), ss.str()};
}

std::string tmp_path(const std::string& name) {
    return std::string("/tmp/qckt_test_") + name;
}

void write(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("random is seed-reproducible and re-parses") {
    std::string p1 = tmp_path("r1.qckt"), p2 = tmp_path("r2.qckt");
    CHECK(run_cli("random --nbits 2 --dcnots 6 --seed 42 -o " + p1).code == 0);
    CHECK(run_cli("random --nbits 2 --dcnots 6 --seed 42 -o " + p2).code == 0);
    std::string t1 = slurp(p1), t2 = slurp(p2);
    CHECK(t1 == t2);
    qckt::Circuit c = qckt::parse(t1);
    CHECK(c.nbits == 2);
    CHECK(c.gates.size() == 6);
    // invalid counts
    CHECK(run_cli("random --nbits 4 --dcnots 2").code == 2);
    CHECK(run_cli("random --nbits 1 --dcnots 2").code == 2);
}

TEST_CASE("simplify pipeline") {
    std::string in = tmp_path("s_in.qckt"), out = tmp_path("s_out.qckt");
    CHECK(run_cli("random --nbits 2 --dcnots 10 --seed 7 -o " + in).code == 0);
    CmdResult r = run_cli("simplify " + in + " -o " + out + " --verify --report json");
    CHECK(r.code == 0);
    CHECK(r.out.find("\"final_dcnot_count\": ") != std::string::npos);
    qckt::Circuit simplified = qckt::parse(slurp(out));
    int dcnots = 0;
    for (const auto& g : simplified.gates)
        if (std::holds_alternative<qckt::DcNot>(g)) ++dcnots;
    CHECK(dcnots <= 3);
    // verify the pair in both modes
    CHECK(run_cli("verify " + in + " " + out).code == 0);
    CHECK(run_cli("verify " + in + " " + out + " --mode exact").code == 0);
}

TEST_CASE("simplify on an empty circuit") {
    std::string in = tmp_path("empty.qckt"), out = tmp_path("empty_out.qckt");
    write(in, "QCKT 1\nNBITS 2\n");
    CmdResult r = run_cli("simplify " + in + " -o " + out + " --verify");
    CHECK(r.code == 0);
    qckt::Circuit c = qckt::parse(slurp(out));
    CHECK(c.gates.empty());
}

TEST_CASE("malformed input exits 2 with a line number") {
    std::string in = tmp_path("bad.qckt");
    write(in, "QCKT 1\nNBITS 2\nDCNOT 0 1 1 0 0 0 0\n");
    CmdResult r = run_cli("simplify " + in);
    CHECK(r.code == 2);
    CHECK(r.out.find("line 3") != std::string::npos);
}

TEST_CASE("verify distinguishes CNOT from SWAP") {
    std::string cnot = tmp_path("cnot.qckt"), swap = tmp_path("swap.qckt");
    write(cnot, "QCKT 1\nNBITS 2\nDCNOT 0 1 1 0 0 0 0 1\n");
    write(swap,
          "QCKT 1\nNBITS 2\nDCNOT 0 1 1 0 0 0 0 1\nDCNOT 0 1 0 0 1 1 0 0\nDCNOT 0 1 1 0 0 0 0 "
          "1\n");
    CHECK(run_cli("verify " + cnot + " " + cnot).code == 0);
    CHECK(run_cli("verify " + cnot + " " + swap).code == 1);
    // dimension mismatch
    std::string one = tmp_path("one.qckt");
    write(one, "QCKT 1\nNBITS 1\n");
    CHECK(run_cli("verify " + cnot + " " + one).code == 2);
}

TEST_CASE("invariant command") {
    std::string cnot = tmp_path("inv.qckt");
    write(cnot, "QCKT 1\nNBITS 2\nDCNOT 0 1 1 0 0 0 0 1\n");
    CmdResult r = run_cli("invariant " + cnot);
    CHECK(r.code == 0);
    CHECK(r.out.find("A^(2):") != std::string::npos);
    // identity circuit: scalar 1 parts
    std::string idc = tmp_path("id.qckt");
    write(idc, "QCKT 1\nNBITS 2\n");
    CmdResult r2 = run_cli("invariant " + idc);
    CHECK(r2.code == 0);
    CHECK(r2.out.find("lam_r =  1.0000") != std::string::npos);
    // diagonalize a random 2-run
    std::string two = tmp_path("two.qckt");
    CHECK(run_cli("random --nbits 2 --dcnots 2 --seed 5 -o " + two).code == 0);
    CmdResult r3 = run_cli("invariant " + two + " --diagonalize");
    CHECK(r3.code == 0);
    CHECK(r3.out.find("shape: 2 DC-NOTs") != std::string::npos);
    // and a 3-run
    std::string three = tmp_path("three.qckt");
    CHECK(run_cli("random --nbits 2 --dcnots 3 --seed 5 -o " + three).code == 0);
    CmdResult r4 = run_cli("invariant " + three + " --diagonalize");
    CHECK(r4.code == 0);
    CHECK(r4.out.find("shape: 3 DC-NOTs") != std::string::npos);
}

TEST_CASE("3-qubit verify via factorization") {
    std::string in = tmp_path("v3_in.qckt"), out = tmp_path("v3_out.qckt");
    CHECK(run_cli("random --nbits 3 --dcnots 6 --seed 11 -o " + in).code == 0);
    CHECK(run_cli("simplify " + in + " -o " + out + " --verify").code == 0);
    CHECK(run_cli("verify " + in + " " + out).code == 0);
    CHECK(run_cli("verify " + in + " " + out + " --mode exact").code == 0);
}
