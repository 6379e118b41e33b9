#pragma once

#include <limits>
#include <vector>

#include "thermix/hamiltonian.hpp"
#include "thermix/mps.hpp"

namespace thermix {

inline constexpr int kUnlimitedBond = std::numeric_limits<int>::max();

struct TrotterGate {
    int bond = 0;  // acts on sites (bond, bond+1)
    MatrixXcd op;
};

struct TrotterGateSet {
    std::vector<TrotterGate> gates;  // one full step, in application order
    double dt = 0.0;
    int order = 2;
    bool imaginary = false;
};

// Bundles single-site fields into the adjacent bond matrices (half/half on
// interior sites) and exponentiates per bond. order 2 uses the symmetric
// even/odd/even split.
TrotterGateSet trotter_gates(const SpinChainHamiltonian& h, double dt, int order, bool imaginary);

struct EvolutionResult {
    Mps state;
    double truncation_error = 0.0;  // sqrt of accumulated discarded weight
    double log_norm = 0.0;          // imaginary time only
};

EvolutionResult evolve(const Mps& psi, const TrotterGateSet& gates, int steps, int dmax,
                       double tol = 0.0);

}  // namespace thermix
