#pragma once

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "qckt/circuit.hpp"

namespace qckt {

/// Syntax or contract failure while reading the circuit text format.
struct ParseError : std::runtime_error {
    int line;
    ParseError(int line_, const std::string& msg)
        : std::runtime_error("line " + std::to_string(line_) + ": " + msg), line(line_) {}
};

namespace detail {

inline UnitVec3 parse_unit_vec(double x, double y, double z, int line) {
    Vec3 v{x, y, z};
    if (!finite(v)) throw ParseError(line, "non-finite vector component");
    double n = norm(v);
    if (std::abs(n - 1.0) > 1e-6)
        throw ParseError(line, "vector norm " + std::to_string(n) + " deviates from 1 by more than 1e-6");
    return UnitVec3::normalized(v);
}

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

/// Parse the QCKT text format. '#' starts a comment; tokens are whitespace-separated.
///   line 1: QCKT 1
///   line 2: NBITS <n>, n in {1,2,3}
///   then one gate per line:
///     DCNOT <wire_i> <wire_j> <vix> <viy> <viz> <vjx> <vjy> <vjz>
///     ROT <wire> <ax> <ay> <az> <theta>
///     PHASE <theta>
/// Vectors within 1e-6 of unit norm are renormalized; worse are rejected.
inline Circuit parse(const std::string& text) {
    Circuit c;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    bool saw_magic = false, saw_nbits = false;

    auto next_fields = [&](std::vector<std::string>& fields) -> bool {
        while (std::getline(in, raw)) {
            ++lineno;
            auto hash = raw.find('#');
            std::string body = hash == std::string::npos ? raw : raw.substr(0, hash);
            std::istringstream ls(body);
            fields.clear();
            std::string tok;
            while (ls >> tok) fields.push_back(tok);
            if (!fields.empty()) return true;
        }
        return false;
    };
    auto to_int = [&](const std::string& s) {
        std::size_t pos = 0;
        int v = 0;
        try {
            v = std::stoi(s, &pos);
        } catch (...) {
            throw ParseError(lineno, "expected an integer, got '" + s + "'");
        }
        if (pos != s.size()) throw ParseError(lineno, "expected an integer, got '" + s + "'");
        return v;
    };
    auto to_double = [&](const std::string& s) {
        std::size_t pos = 0;
        double v = 0;
        try {
            v = std::stod(s, &pos);
        } catch (...) {
            throw ParseError(lineno, "expected a number, got '" + s + "'");
        }
        if (pos != s.size()) throw ParseError(lineno, "expected a number, got '" + s + "'");
        return v;
    };
    auto check_wire = [&](int w) {
        if (w < 0 || w >= c.nbits)
            throw ParseError(lineno, "wire index " + std::to_string(w) + " out of range for NBITS " +
                                         std::to_string(c.nbits));
    };

    std::vector<std::string> f;
    while (next_fields(f)) {
        if (!saw_magic) {
            if (f.size() != 2 || f[0] != "QCKT" || f[1] != "1")
                throw ParseError(lineno, "expected header 'QCKT 1'");
            saw_magic = true;
            continue;
        }
        if (!saw_nbits) {
            if (f.size() != 2 || f[0] != "NBITS") throw ParseError(lineno, "expected 'NBITS <n>'");
            int n = to_int(f[1]);
            if (n < 1 || n > 3) throw ParseError(lineno, "NBITS must be 1, 2 or 3");
            c.nbits = n;
            saw_nbits = true;
            continue;
        }
        if (f[0] == "DCNOT") {
            if (f.size() != 9) throw ParseError(lineno, "DCNOT needs 8 arguments");
            int wi = to_int(f[1]), wj = to_int(f[2]);
            check_wire(wi);
            check_wire(wj);
            if (wi == wj) throw ParseError(lineno, "DCNOT wires must differ");
            UnitVec3 vi = detail::parse_unit_vec(to_double(f[3]), to_double(f[4]), to_double(f[5]), lineno);
            UnitVec3 vj = detail::parse_unit_vec(to_double(f[6]), to_double(f[7]), to_double(f[8]), lineno);
            c.gates.push_back(DcNot{wi, vi, wj, vj});
        } else if (f[0] == "ROT") {
            if (f.size() != 6) throw ParseError(lineno, "ROT needs 5 arguments");
            int w = to_int(f[1]);
            check_wire(w);
            UnitVec3 ax = detail::parse_unit_vec(to_double(f[2]), to_double(f[3]), to_double(f[4]), lineno);
            double theta = to_double(f[5]);
            if (!std::isfinite(theta)) throw ParseError(lineno, "non-finite angle");
            c.gates.push_back(LocalRot{w, ax, theta});
        } else if (f[0] == "PHASE") {
            if (f.size() != 2) throw ParseError(lineno, "PHASE needs 1 argument");
            double theta = to_double(f[1]);
            if (!std::isfinite(theta)) throw ParseError(lineno, "non-finite angle");
            c.gates.push_back(GlobalPhase{theta});
        } else {
            throw ParseError(lineno, "unknown gate '" + f[0] + "'");
        }
    }
    if (!saw_magic) throw ParseError(lineno, "missing 'QCKT 1' header");
    if (!saw_nbits) throw ParseError(lineno, "missing NBITS line");
    return c;
}

/// Serialize in chronological gate order with 17 significant digits.
inline std::string serialize(const Circuit& c) {
    validate(c);
    std::string out = "QCKT 1\nNBITS " + std::to_string(c.nbits) + "\n";
    using detail::fmt17;
    for (const Gate& g : c.gates) {
        if (const auto* d = std::get_if<DcNot>(&g)) {
            out += "DCNOT " + std::to_string(d->wire_i) + " " + std::to_string(d->wire_j);
            const Vec3& a = d->v_i.vec();
            const Vec3& b = d->v_j.vec();
            for (double v : {a.x, a.y, a.z, b.x, b.y, b.z}) out += " " + fmt17(v);
            out += "\n";
        } else if (const auto* r = std::get_if<LocalRot>(&g)) {
            out += "ROT " + std::to_string(r->wire);
            const Vec3& a = r->axis.vec();
            for (double v : {a.x, a.y, a.z, r->theta}) out += " " + fmt17(v);
            out += "\n";
        } else {
            out += "PHASE " + fmt17(std::get<GlobalPhase>(g).theta) + "\n";
        }
    }
    return out;
}

}  // namespace qckt
