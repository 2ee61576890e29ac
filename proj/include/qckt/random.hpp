#pragma once

#include <cstdint>
#include <random>

#include "qckt/circuit.hpp"

namespace qckt {

/// Deterministic, cross-platform sphere sampler: std::mt19937_64 drives
/// uniform doubles via (word >> 11) * 2^-53, and unit vectors come from
/// normalized 3-component Box-Muller Gaussian draws (two pairs per vector,
/// fourth component discarded). Identical seeds give identical bytes on any
/// IEEE-754 platform.
class SphereSampler {
  public:
    explicit SphereSampler(std::uint64_t seed) : eng_(seed) {}

    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    UnitVec3 unit_vec() {
        while (true) {
            double g[4];
            for (int k = 0; k < 4; k += 2) {
                double u1 = 1.0 - uniform();
                double u2 = uniform();
                double r = std::sqrt(-2.0 * std::log(u1));
                g[k] = r * std::cos(2.0 * M_PI * u2);
                g[k + 1] = r * std::sin(2.0 * M_PI * u2);
            }
            Vec3 v{g[0], g[1], g[2]};
            if (norm(v) > 1e-6) return UnitVec3::normalized(v);
        }
    }

    int uniform_int(int n) { return static_cast<int>(uniform() * n) % n; }

  private:
    std::mt19937_64 eng_;
};

/// Seeded random circuit of DC-NOTs with uniform-on-sphere defining vectors.
inline Circuit random_dcnot_circuit(std::uint64_t seed, int nbits, int dcnots) {
    if (nbits < 1 || nbits > 3)
        throw std::invalid_argument("random_dcnot_circuit: nbits must be 1..3");
    if (nbits < 2 && dcnots > 0)
        throw std::invalid_argument("random_dcnot_circuit: DC-NOTs need at least 2 wires");
    SphereSampler s(seed);
    Circuit c{nbits, {}};
    for (int k = 0; k < dcnots; ++k) {
        int wi = s.uniform_int(nbits);
        int wj = (wi + 1 + s.uniform_int(nbits - 1)) % nbits;
        c.gates.push_back(DcNot{wi, s.unit_vec(), wj, s.unit_vec()});
    }
    return c;
}

}  // namespace qckt
