#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qckt/format.hpp"
#include "qckt/rewrite2q.hpp"
#include "qckt/rewrite3q.hpp"

namespace qckt {

namespace rules {
inline constexpr std::uint32_t k4to3 = 1u << 0;
inline constexpr std::uint32_t k3to2 = 1u << 1;
inline constexpr std::uint32_t k3to1 = 1u << 2;
inline constexpr std::uint32_t k3to0 = 1u << 3;
inline constexpr std::uint32_t k2to1 = 1u << 4;
inline constexpr std::uint32_t k2to0 = 1u << 5;
inline constexpr std::uint32_t kPt1 = 1u << 6;
inline constexpr std::uint32_t kPt2 = 1u << 7;
inline constexpr std::uint32_t kPt3 = 1u << 8;
inline constexpr std::uint32_t kAll = ~0u;
}  // namespace rules

struct OptimizeConfig {
    int max_iter = 64;
    std::uint32_t rule_mask = rules::kAll;
    double verify_tol_scale = 1e-5;  // tolerance = scale * (1 + gatecount)
};

/// Maximal same-pair DC-NOT run inside the normalized gate stream.
struct Segment {
    int wlo = 0, whi = 1;
    int start = 0, end = 0;  // [start, end) indices into the DC-NOT stream
};

struct OptimizeReport {
    int initial_dcnot_count = 0;
    int final_dcnot_count = 0;
    std::vector<std::pair<std::string, int>> passes_applied;  // (rule, position)
    double total_residual = 0.0;
    bool verified = false;
    int no_solution_found_count = 0;
};

namespace detail {

/// Rotate the defining vector a DC-NOT carries on `wire` as if conjugated by
/// e^{i theta sigma_axis} from the later side (the gate moves earlier).
inline void conjugate_dcnot(DcNot& d, const LocalRot& r) {
    if (!d.touches(r.wire)) return;
    UnitVec3& v = d.wire_i == r.wire ? d.v_i : d.v_j;
    v = UnitVec3::normalized(rotate_about(v.vec(), r.axis, -2.0 * r.theta));
}

/// Move a local gate from position `pos` (conceptually between dcnots[pos-1]
/// and dcnots[pos] counting from the front) to the very front, conjugating
/// every DC-NOT it crosses; append to the front-local pool.
inline void absorb_front(std::vector<Gate>& front, std::vector<DcNot>& dcnots, int upto,
                         const Gate& g) {
    if (const auto* r = std::get_if<LocalRot>(&g)) {
        for (int k = 0; k < upto; ++k) conjugate_dcnot(dcnots[k], *r);
    }
    front.push_back(g);
}

/// Replace dcnots[i..j) by a rewrite outcome, exporting its locals to the
/// front pool (exact conjugation bookkeeping).
inline void splice_rewrite(std::vector<Gate>& front, std::vector<DcNot>& dcnots, int i, int j,
                           const RewriteOutcome& out) {
    std::vector<DcNot> next(dcnots.begin(), dcnots.begin() + i);
    int repl_start = static_cast<int>(next.size());
    for (const DcNot& d : out.replacement) next.push_back(d);
    int repl_end = static_cast<int>(next.size());
    std::vector<DcNot> suffix(dcnots.begin() + j, dcnots.end());
    for (const Gate& g : out.pre_locals) absorb_front(front, next, repl_start, g);
    for (const Gate& g : out.post_locals) absorb_front(front, next, repl_end, g);
    for (const DcNot& d : suffix) next.push_back(d);
    dcnots = std::move(next);
}

inline std::vector<Segment> segment_runs(const std::vector<DcNot>& dcnots) {
    std::vector<Segment> segs;
    int n = static_cast<int>(dcnots.size());
    int i = 0;
    while (i < n) {
        int wlo = std::min(dcnots[i].wire_i, dcnots[i].wire_j);
        int whi = std::max(dcnots[i].wire_i, dcnots[i].wire_j);
        int j = i + 1;
        while (j < n && std::min(dcnots[j].wire_i, dcnots[j].wire_j) == wlo &&
               std::max(dcnots[j].wire_i, dcnots[j].wire_j) == whi)
            ++j;
        segs.push_back(Segment{wlo, whi, i, j});
        i = j;
    }
    return segs;
}

struct SimplifyStats {
    int no_solution = 0;
    double residual = 0.0;
    std::vector<std::string> rules;
};

/// Shrink one same-pair run in place (front locals exported), following the
/// 4->3 pipeline and then the exact-reduction ladder.
inline SimplifyStats simplify_segment(std::vector<Gate>& front, std::vector<DcNot>& dcnots,
                                      int start, int& end, std::uint32_t mask) {
    SimplifyStats st;
    auto seg_size = [&] { return end - start; };
    auto view = [&](int count) {
        return std::span<const DcNot>(dcnots.data() + start, static_cast<std::size_t>(count));
    };
    auto apply = [&](const RewriteResult& r, int consumed, const char* name) {
        splice_rewrite(front, dcnots, start, start + consumed, r.outcome);
        end += static_cast<int>(r.outcome.replacement.size()) - consumed;
        st.residual += r.outcome.residual;
        st.rules.push_back(name);
    };
    while (seg_size() > 3 && (mask & rules::k4to3)) {
        RewriteResult r = reduce_4to3(view(4));
        if (r.status == RewriteStatus::no_solution_found ||
            r.status == RewriteStatus::numeric_failure) {
            ++st.no_solution;
            return st;
        }
        apply(r, 4, "4to3");
    }
    bool progressing = true;
    while (progressing) {
        progressing = false;
        if (seg_size() == 3) {
            if (mask & rules::k3to0) {
                RewriteResult r = reduce_3to0(view(3));
                if (r.ok()) {
                    apply(r, 3, "3to0");
                    continue;
                }
            }
            if (mask & rules::k3to1) {
                RewriteResult r = reduce_3to1(view(3));
                if (r.ok()) {
                    apply(r, 3, "3to1");
                    continue;
                }
            }
            if (mask & rules::k3to2) {
                RewriteResult r = reduce_3to2(view(3));
                if (r.ok()) {
                    apply(r, 3, "3to2");
                    progressing = true;
                    continue;
                }
            }
        }
        if (seg_size() == 2) {
            if (mask & rules::k2to0) {
                RewriteResult r = reduce_2to0(view(2));
                if (r.ok()) {
                    apply(r, 2, "2to0");
                    continue;
                }
            }
            if (mask & rules::k2to1) {
                RewriteResult r = reduce_2to1(view(2));
                if (r.ok()) {
                    apply(r, 2, "2to1");
                    continue;
                }
            }
        }
    }
    return st;
}

struct NormalizedCircuit {
    std::vector<Gate> front;
    std::vector<DcNot> dcnots;
};

/// Push every local gate to the front of the circuit, rotating the defining
/// vectors of the DC-NOTs it crosses (a consequence of the dressing: locals
/// merge into neighboring defining vectors exactly).
inline NormalizedCircuit normalize_circuit(const Circuit& c) {
    NormalizedCircuit n;
    for (const Gate& g : c.gates) {
        if (const auto* d = std::get_if<DcNot>(&g))
            n.dcnots.push_back(*d);
        else
            absorb_front(n.front, n.dcnots, static_cast<int>(n.dcnots.size()), g);
    }
    return n;
}

inline int count_after_simplify(std::vector<DcNot> dcnots, std::uint32_t mask) {
    std::vector<Gate> scratch;
    auto segs = segment_runs(dcnots);
    // walk segments back-to-front so earlier indices stay valid
    for (auto it = segs.rbegin(); it != segs.rend(); ++it) {
        int end = it->end;
        simplify_segment(scratch, dcnots, it->start, end, mask);
    }
    // iterate until stable (merging may create new runs)
    for (int pass = 0; pass < 8; ++pass) {
        auto again = segment_runs(dcnots);
        bool changed = false;
        for (auto it = again.rbegin(); it != again.rend(); ++it) {
            int before = static_cast<int>(dcnots.size());
            int end = it->end;
            simplify_segment(scratch, dcnots, it->start, end, mask);
            if (static_cast<int>(dcnots.size()) != before) changed = true;
        }
        if (!changed) break;
    }
    return static_cast<int>(dcnots.size());
}

}  // namespace detail

/// Shrink a same-pair DC-NOT run to at most min(k, 3) gates. Locals are
/// emitted in the outcome; a breach-opening failure leaves the run at its
/// current length (reported through the result status).
inline RewriteResult simplify_run(std::span<const DcNot> run) {
    if (run.empty()) throw std::invalid_argument("simplify_run: empty run");
    std::vector<Gate> front;
    std::vector<DcNot> dcnots(run.begin(), run.end());
    int end = static_cast<int>(dcnots.size());
    detail::SimplifyStats st =
        detail::simplify_segment(front, dcnots, 0, end, rules::kAll);
    RewriteResult res;
    res.status = RewriteStatus::applied;
    res.outcome.replacement = dcnots;
    res.outcome.pre_locals = front;
    // final certificate against the original run
    int nbits = 0;
    for (const DcNot& d : run) nbits = std::max({nbits, d.wire_i + 1, d.wire_j + 1});
    CMat l = CMat::identity(1 << nbits);
    for (const DcNot& d : run) l = dcnot_unitary(d, nbits) * l;
    CMat r = gates_unitary(res.outcome.pre_locals, nbits);
    for (const DcNot& d : res.outcome.replacement) r = dcnot_unitary(d, nbits) * r;
    res.outcome.residual = frob_dist(l, r);
    if (st.no_solution > 0) res.status = RewriteStatus::no_solution_found;
    return res;
}

/// Fixpoint peephole driver: normalize locals to the front, shrink every
/// same-pair segment, and use pass-throughs to merge runs across wire pairs
/// when a look-ahead shows a net DC-NOT decrease.
inline std::pair<Circuit, OptimizeReport> optimize(const Circuit& c,
                                                   const OptimizeConfig& cfg = {}) {
    validate(c);
    OptimizeReport report;
    for (const Gate& g : c.gates)
        if (std::holds_alternative<DcNot>(g)) ++report.initial_dcnot_count;

    detail::NormalizedCircuit n = detail::normalize_circuit(c);
    std::vector<Gate>& front = n.front;
    std::vector<DcNot>& dcnots = n.dcnots;

    for (int iter = 0; iter < cfg.max_iter; ++iter) {
        bool changed = false;
        // shrink each maximal run
        auto segs = detail::segment_runs(dcnots);
        for (auto it = segs.rbegin(); it != segs.rend(); ++it) {
            int before = static_cast<int>(dcnots.size());
            int end = it->end;
            detail::SimplifyStats st =
                detail::simplify_segment(front, dcnots, it->start, end, cfg.rule_mask);
            report.no_solution_found_count += st.no_solution;
            report.total_residual += st.residual;
            for (const std::string& rn : st.rules) report.passes_applied.emplace_back(rn, it->start);
            if (static_cast<int>(dcnots.size()) != before) changed = true;
        }
        if (changed) continue;

        // pass-through attempts at single-gate junctions between same-pair runs
        bool pt_done = false;
        segs = detail::segment_runs(dcnots);
        for (std::size_t k = 0; k + 1 < segs.size() && !pt_done; ++k) {
            for (std::size_t j : {k, k + 1}) {
                // j indexes the candidate static segment; the other side is mobile
                if (j >= segs.size()) continue;
                const Segment& sq = segs[j];
                if (sq.end - sq.start != 1) continue;
                // try passing this static through the left neighbor (canonical)
                // and through the right neighbor (reversed)
                struct Attempt {
                    bool canonical;
                    std::size_t other;
                };
                std::vector<Attempt> attempts;
                if (j > 0) attempts.push_back({true, j - 1});
                if (j + 1 < segs.size()) attempts.push_back({false, j + 1});
                for (const Attempt& at : attempts) {
                    const Segment& sm = segs[at.other];
                    int shared_count = int(sm.wlo == sq.wlo) + int(sm.wlo == sq.whi) +
                                       int(sm.whi == sq.wlo) + int(sm.whi == sq.whi);
                    if (shared_count != 1) continue;
                    int mlen = std::min(3, sm.end - sm.start);
                    for (int m = 1; m <= mlen; ++m) {
                        std::uint32_t need = m == 1 ? rules::kPt1 : (m == 2 ? rules::kPt2 : rules::kPt3);
                        if (!(cfg.rule_mask & need)) continue;
                        PassThroughContext ctx;
                        ctx.static_gate = dcnots[sq.start];
                        ctx.mobile_first = at.canonical;
                        if (at.canonical) {
                            // mobile = last m gates of the left segment
                            for (int g = sm.end - m; g < sm.end; ++g)
                                ctx.mobile_run.push_back(dcnots[g]);
                        } else {
                            for (int g = sm.start; g < sm.start + m; ++g)
                                ctx.mobile_run.push_back(dcnots[g]);
                        }
                        RewriteResult r = pass_through(ctx);
                        if (!r.ok()) continue;
                        // look-ahead: does committing reduce the total count?
                        std::vector<Gate> front_copy = front;
                        std::vector<DcNot> trial = dcnots;
                        int i0 = at.canonical ? sm.end - m : sq.start;
                        int j0 = at.canonical ? sq.start + 1 : sm.start + m;
                        detail::splice_rewrite(front_copy, trial, i0, j0, r.outcome);
                        int now = static_cast<int>(dcnots.size());
                        int after = detail::count_after_simplify(trial, cfg.rule_mask);
                        if (after < now) {
                            detail::splice_rewrite(front, dcnots, i0, j0, r.outcome);
                            report.total_residual += r.outcome.residual;
                            report.passes_applied.emplace_back(
                                m == 1 ? "pt1" : (m == 2 ? "pt2" : "pt3"), i0);
                            pt_done = true;
                            changed = true;
                            break;
                        }
                    }
                    if (pt_done) break;
                }
                if (pt_done) break;
            }
        }
        if (!changed) break;
    }

    Circuit out{c.nbits, {}};
    for (const Gate& g : front) out.gates.push_back(g);
    for (const DcNot& d : dcnots) out.gates.push_back(d);
    report.final_dcnot_count = static_cast<int>(dcnots.size());

    double defect = frob_dist(circuit_unitary(c), circuit_unitary(out));
    report.total_residual += defect;
    double tol = cfg.verify_tol_scale * (1.0 + static_cast<double>(c.gates.size()));
    report.verified = defect <= tol;
    return {out, report};
}

}  // namespace qckt
