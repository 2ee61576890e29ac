#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "qckt/format.hpp"

using namespace qckt;
using testutil::Rng;

TEST_CASE("parse minimal circuit") {
    Circuit c = parse("QCKT 1\nNBITS 2\nDCNOT 0 1 1 0 0 0 0 1\n");
    REQUIRE(c.nbits == 2);
    REQUIRE(c.gates.size() == 1);
    const DcNot& d = std::get<DcNot>(c.gates[0]);
    CHECK(testutil::approx(d.v_i.vec(), kXhat));
    CHECK(testutil::approx(d.v_j.vec(), kZhat));
}

TEST_CASE("parse errors carry line numbers") {
    CHECK_THROWS_AS(parse("# only a comment\n"), ParseError);
    CHECK_THROWS_AS(parse("QCKT 1\n# no nbits\n"), ParseError);
    try {
        parse("QCKT 1\nNBITS 2\nDCNOT 0 1 1 0 0 0 0\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 3);
    }
    CHECK_THROWS_AS(parse("QCKT 1\nNBITS 4\n"), ParseError);
    CHECK_THROWS_AS(parse("QCKT 1\nNBITS 2\nDCNOT 0 2 1 0 0 0 0 1\n"), ParseError);
    CHECK_THROWS_AS(parse("QCKT 1\nNBITS 2\nDCNOT 0 0 1 0 0 0 0 1\n"), ParseError);
    CHECK_THROWS_AS(parse("QCKT 1\nNBITS 2\nWIBBLE 1\n"), ParseError);
    // non-unit vector beyond 1e-6 is rejected
    CHECK_THROWS_AS(parse("QCKT 1\nNBITS 2\nDCNOT 0 1 1.001 0 0 0 0 1\n"), ParseError);
    // within 1e-6 it is silently renormalized
    Circuit ok = parse("QCKT 1\nNBITS 2\nDCNOT 0 1 1.0000001 0 0 0 0 1\n");
    CHECK(std::abs(norm(std::get<DcNot>(ok.gates[0]).v_i.vec()) - 1.0) < 1e-15);
}

TEST_CASE("comments and blank lines ignored") {
    Circuit c = parse("# header comment\nQCKT 1\n\nNBITS 3 # trailing\n\nPHASE 0.5\nROT 2 0 0 1 1.25\n");
    CHECK(c.nbits == 3);
    CHECK(c.gates.size() == 2);
    CHECK(std::get<GlobalPhase>(c.gates[0]).theta == doctest::Approx(0.5));
    CHECK(std::get<LocalRot>(c.gates[1]).wire == 2);
}

TEST_CASE("round trip is byte-stable after one normalization") {
    Rng rng(31);
    for (int t = 0; t < 25; ++t) {
        Circuit c{3, {}};
        for (int g = 0; g < 6; ++g) {
            int pick = static_cast<int>(rng.uniform(0, 3));
            if (pick == 0) {
                int wi = static_cast<int>(rng.uniform(0, 3));
                int wj = (wi + 1 + static_cast<int>(rng.uniform(0, 2))) % 3;
                c.gates.push_back(DcNot{wi, rng.unit_vec(), wj, rng.unit_vec()});
            } else if (pick == 1) {
                c.gates.push_back(LocalRot{static_cast<int>(rng.uniform(0, 3)), rng.unit_vec(),
                                           rng.uniform(-3, 3)});
            } else {
                c.gates.push_back(GlobalPhase{rng.uniform(-3, 3)});
            }
        }
        std::string t1 = serialize(parse(serialize(c)));
        std::string t2 = serialize(parse(t1));
        CHECK(t1 == t2);
        // parse . serialize is the identity on circuits (structural equality)
        Circuit c2 = parse(serialize(c));
        REQUIRE(c2.gates.size() == c.gates.size());
        CHECK(frob_dist(circuit_unitary(c2), circuit_unitary(c)) < 1e-12);
    }
}
