#pragma once

// Umbrella header for the dressed-CNOT circuit toolkit.

#include "qckt/circuit.hpp"
#include "qckt/cmat.hpp"
#include "qckt/format.hpp"
#include "qckt/invariants.hpp"
#include "qckt/optimizer.hpp"
#include "qckt/random.hpp"
#include "qckt/rewrite2q.hpp"
#include "qckt/rewrite3q.hpp"
#include "qckt/rmat.hpp"
#include "qckt/su2.hpp"
#include "qckt/vec3.hpp"
