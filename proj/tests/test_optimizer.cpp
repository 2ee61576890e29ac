#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "qckt/optimizer.hpp"

using namespace qckt;
using testutil::Rng;

namespace {

Circuit random_dcnot_circuit(Rng& rng, int nbits, int count) {
    Circuit c{nbits, {}};
    for (int k = 0; k < count; ++k) {
        int wi = static_cast<int>(rng.uniform(0, nbits));
        int wj = (wi + 1 + static_cast<int>(rng.uniform(0, nbits - 1))) % nbits;
        c.gates.push_back(DcNot{wi, rng.unit_vec(), wj, rng.unit_vec()});
    }
    return c;
}

}  // namespace

TEST_CASE("local normalization is exact") {
    Rng rng(100);
    for (int t = 0; t < 50; ++t) {
        Circuit c{2, {}};
        for (int k = 0; k < 6; ++k) {
            if (k % 2 == 0)
                c.gates.push_back(DcNot{0, rng.unit_vec(), 1, rng.unit_vec()});
            else
                c.gates.push_back(
                    LocalRot{static_cast<int>(rng.uniform(0, 2)), rng.unit_vec(), rng.uniform(-3, 3)});
        }
        detail::NormalizedCircuit n = detail::normalize_circuit(c);
        Circuit renorm{2, {}};
        for (const Gate& g : n.front) renorm.gates.push_back(g);
        for (const DcNot& d : n.dcnots) renorm.gates.push_back(d);
        CHECK(frob_dist(circuit_unitary(c), circuit_unitary(renorm)) < 1e-11);
    }
}

TEST_CASE("simplify_run") {
    Rng rng(101);
    // k = 1 unchanged
    {
        std::array<DcNot, 1> run{rng.dcnot()};
        RewriteResult r = simplify_run(run);
        REQUIRE(r.ok());
        CHECK(r.outcome.replacement.size() == 1);
        CHECK(r.outcome.pre_locals.empty());
    }
    // k = 6 random: down to <= 3 with passing certificate
    for (int t = 0; t < 40; ++t) {
        std::vector<DcNot> run;
        for (int k = 0; k < 6; ++k) run.push_back(rng.dcnot());
        RewriteResult r = simplify_run(run);
        REQUIRE(r.ok());
        CHECK(r.outcome.replacement.size() <= 3);
        CHECK(r.outcome.residual <= 1e-5);
    }
    // k = 4 engineered to a 2-gate-equivalent circuit: a pair plus a
    // cancelling pair reaches <= 2 via the 3->2 predicate
    for (int t = 0; t < 25; ++t) {
        DcNot g1 = rng.dcnot(), g2 = rng.dcnot(), g3 = rng.dcnot();
        std::vector<DcNot> run{g1, g2, g3, g3};
        RewriteResult r = simplify_run(run);
        REQUIRE(r.ok());
        CHECK(r.outcome.replacement.size() <= 3);
        CHECK(r.outcome.residual <= 1e-5);
    }
}

TEST_CASE("optimize 2-qubit circuits reach <= 3 DC-NOTs") {
    Rng rng(102);
    for (int t = 0; t < 60; ++t) {
        int count = 4 + static_cast<int>(rng.uniform(0, 7));
        Circuit c = random_dcnot_circuit(rng, 2, count);
        auto [out, report] = optimize(c);
        CHECK(report.no_solution_found_count == 0);
        CHECK(report.final_dcnot_count <= 3);
        CHECK(report.final_dcnot_count <= report.initial_dcnot_count);
        CHECK(report.verified);
    }
}

TEST_CASE("optimize mixed circuits with locals") {
    Rng rng(103);
    for (int t = 0; t < 30; ++t) {
        Circuit c{2, {}};
        for (int k = 0; k < 8; ++k) {
            double pick = rng.uniform(0, 1);
            if (pick < 0.6)
                c.gates.push_back(DcNot{0, rng.unit_vec(), 1, rng.unit_vec()});
            else if (pick < 0.85)
                c.gates.push_back(LocalRot{static_cast<int>(rng.uniform(0, 2)), rng.unit_vec(),
                                           rng.uniform(-3, 3)});
            else
                c.gates.push_back(GlobalPhase{rng.uniform(-3, 3)});
        }
        auto [out, report] = optimize(c);
        CHECK(report.verified);
        CHECK(report.final_dcnot_count <= 3);
    }
}

TEST_CASE("optimize unchanged on minimal input") {
    Rng rng(104);
    Circuit c{2, {rng.dcnot()}};
    auto [out, report] = optimize(c);
    CHECK(report.initial_dcnot_count == 1);
    CHECK(report.final_dcnot_count == 1);
    CHECK(report.passes_applied.empty());
    CHECK(report.verified);
}

TEST_CASE("optimize 3-qubit circuits are sound") {
    Rng rng(105);
    for (int t = 0; t < 40; ++t) {
        int count = 3 + static_cast<int>(rng.uniform(0, 6));
        Circuit c = random_dcnot_circuit(rng, 3, count);
        auto [out, report] = optimize(c);
        CHECK(report.verified);
        CHECK(report.final_dcnot_count <= report.initial_dcnot_count);
    }
}

TEST_CASE("pass-through example scenario reduces the count") {
    // a 3-run on (0,1), a static on (0,2) with the shared-wire vectors
    // parallel to the adjacent mobile, then 1 more mobile on (0,1):
    // pass-through 1 lines up 4 adjacent gates and 4->3 fires
    Rng rng(106);
    int improved = 0;
    for (int t = 0; t < 20; ++t) {
        Circuit c{3, {}};
        for (int k = 0; k < 3; ++k) c.gates.push_back(DcNot{0, rng.unit_vec(), 1, rng.unit_vec()});
        UnitVec3 shared = rng.unit_vec();
        c.gates.push_back(DcNot{0, shared, 2, rng.unit_vec()});
        c.gates.push_back(DcNot{0, shared, 1, rng.unit_vec()});
        auto [out, report] = optimize(c);
        CHECK(report.verified);
        if (report.final_dcnot_count < report.initial_dcnot_count) ++improved;
    }
    CHECK(improved == 20);
}

TEST_CASE("determinism") {
    Rng rng(107);
    Circuit c = random_dcnot_circuit(rng, 2, 7);
    auto [out1, rep1] = optimize(c);
    auto [out2, rep2] = optimize(c);
    CHECK(serialize(out1) == serialize(out2));
    CHECK(rep1.final_dcnot_count == rep2.final_dcnot_count);
}

TEST_CASE("rule mask disables rewrites") {
    Rng rng(108);
    Circuit c = random_dcnot_circuit(rng, 2, 6);
    OptimizeConfig none;
    none.rule_mask = 0;
    auto [out, report] = optimize(c, none);
    CHECK(report.final_dcnot_count == report.initial_dcnot_count);
    CHECK(report.passes_applied.empty());
    CHECK(report.verified);
    // only the 4->3 pipeline enabled: count still reaches <= 3 on 2 qubits
    OptimizeConfig only43;
    only43.rule_mask = rules::k4to3;
    auto [out2, rep2] = optimize(c, only43);
    CHECK(rep2.final_dcnot_count <= 3);
    CHECK(rep2.verified);
    // pass-throughs masked off: the 3-qubit junction scenario cannot improve
    Circuit j{3, {}};
    for (int k = 0; k < 3; ++k) j.gates.push_back(DcNot{0, rng.unit_vec(), 1, rng.unit_vec()});
    UnitVec3 shared = rng.unit_vec();
    j.gates.push_back(DcNot{0, shared, 2, rng.unit_vec()});
    j.gates.push_back(DcNot{0, shared, 1, rng.unit_vec()});
    OptimizeConfig nopt;
    nopt.rule_mask = rules::kAll & ~(rules::kPt1 | rules::kPt2 | rules::kPt3);
    auto [out3, rep3] = optimize(j, nopt);
    CHECK(rep3.final_dcnot_count == rep3.initial_dcnot_count);
    auto [out4, rep4] = optimize(j);
    CHECK(rep4.final_dcnot_count < rep4.initial_dcnot_count);
}

TEST_CASE("iteration cap still reports a verified flag") {
    Rng rng(109);
    Circuit c = random_dcnot_circuit(rng, 2, 8);
    OptimizeConfig one;
    one.max_iter = 1;
    auto [out, report] = optimize(c, one);
    CHECK(report.verified);  // the final check runs regardless of the cap
}

TEST_CASE("long runs on higher wire pairs") {
    // regression: 4->3 on pairs other than (0, 1) once mixed up the embedded
    // and actual wire indices
    Rng rng(110);
    for (auto [wi, wj] : {std::pair{1, 2}, std::pair{0, 2}}) {
        for (int t = 0; t < 15; ++t) {
            std::vector<DcNot> run;
            for (int k = 0; k < 5; ++k) run.push_back(rng.dcnot(wi, wj));
            RewriteResult r = simplify_run(run);
            REQUIRE(r.ok());
            CHECK(r.outcome.replacement.size() <= 3);
            CHECK(r.outcome.residual <= 1e-5);
            for (const DcNot& d : r.outcome.replacement) {
                CHECK(d.touches(wi));
                CHECK(d.touches(wj));
            }
        }
    }
}

TEST_CASE("single-wire circuits pass through untouched") {
    Circuit c{1, {LocalRot{0, kUz, 0.7}, GlobalPhase{0.3}, LocalRot{0, kUx, -1.1}}};
    auto [out, report] = optimize(c);
    CHECK(report.initial_dcnot_count == 0);
    CHECK(report.final_dcnot_count == 0);
    CHECK(report.verified);
}

TEST_CASE("optimized output re-serializes to a valid file") {
    Rng rng(111);
    for (int t = 0; t < 10; ++t) {
        Circuit c = random_dcnot_circuit(rng, 3, 7);
        auto [out, report] = optimize(c);
        Circuit back = parse(serialize(out));
        CHECK(frob_dist(circuit_unitary(back), circuit_unitary(out)) < 1e-11);
    }
}
