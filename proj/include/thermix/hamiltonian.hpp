#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "thermix/types.hpp"

namespace thermix {

enum class Boundary { open, periodic };

// Hermitian term on `width` (1 or 2) adjacent sites starting at `first_site`.
// A width-2 term at first_site = n-1 is the periodic wrap bond (n-1, 0).
struct LocalTerm {
    int first_site = 0;
    int width = 1;
    MatrixXcd op;
};

struct HamiltonianSpec {
    std::string preset = "tfim";  // "tfim" | "heisenberg" | "custom"
    int n = 0;
    double J = 1.0;
    double g = 1.0;
    Boundary boundary = Boundary::open;
    bool normalize = true;
    std::vector<LocalTerm> terms;  // custom preset only

    static HamiltonianSpec from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

// Stored terms are rescaled so that max_i ||h_i||_inf = 1 (unless the spec
// disables normalization); the physical Hamiltonian is energy_scale * sum h_i.
struct SpinChainHamiltonian {
    int n = 0;
    Boundary boundary = Boundary::open;
    double energy_scale = 1.0;
    std::string preset;
    std::vector<LocalTerm> terms;

    int max_term_width() const;
};

SpinChainHamiltonian build_hamiltonian(const HamiltonianSpec& spec);

// Dense 2^n x 2^n matrices; site 0 is the most significant qubit.
MatrixXcd assemble_dense(const SpinChainHamiltonian& h);           // sum of stored terms
MatrixXcd assemble_dense_physical(const SpinChainHamiltonian& h);  // energy_scale * sum

// Sub-chain Hamiltonian keeping only the terms fully inside
// [first, first+width); sites are renumbered to 0..width-1. Inherits the
// parent's energy scale (terms are not renormalized).
SpinChainHamiltonian restrict_to_window(const SpinChainHamiltonian& h, int first, int width);

double operator_inf_norm(const MatrixXcd& hermitian);

}  // namespace thermix
