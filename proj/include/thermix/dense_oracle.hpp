#pragma once

#include <vector>

#include "thermix/hamiltonian.hpp"
#include "thermix/types.hpp"

// Exact reference computations on the full 2^n-dimensional space. Everything
// here is meant as ground truth for the tensor-network code paths, so clarity
// wins over scale: states up to n = 16, operators up to n = 10.

namespace thermix {

// Contiguous tripartition alpha = [0, alpha_end), beta = [alpha_end, beta_end),
// gamma = [beta_end, n). alpha and gamma may be empty only where stated.
struct RegionSplit {
    int alpha_end = 0;
    int beta_end = 0;
    int n = 0;

    std::vector<int> alpha_sites() const;
    std::vector<int> beta_sites() const;
    std::vector<int> gamma_sites() const;
    void validate(bool allow_empty_edges = false) const;
};

// Eigendecomposition-based Hermitian matrix functions. Eigenvalues below
// clamp * max|eig| are treated as zero in log/inverse branches.
MatrixXcd herm_exp(const MatrixXcd& h, double factor);
MatrixXcd herm_sqrt(const MatrixXcd& h);
MatrixXcd herm_inv_sqrt(const MatrixXcd& h, double clamp = 1e-14);
MatrixXcd herm_pinv(const MatrixXcd& h, double clamp = 1e-14);

struct GibbsResult {
    MatrixXcd rho;
    double log_z = 0.0;  // log Tr exp(-H/T), physical units
    double energy = 0.0;
    double temperature = 0.0;
};
GibbsResult gibbs_state(const SpinChainHamiltonian& h, double temperature);

double trace_norm(const MatrixXcd& hermitian);
double trace_distance(const MatrixXcd& a, const MatrixXcd& b);

// rho lives on n qubit sites; keep is a strictly ascending site list.
MatrixXcd partial_trace_sites(const MatrixXcd& rho, int n, const std::vector<int>& keep);

// Natural-log von Neumann entropy; zero eigenvalues contribute zero.
double von_neumann_entropy(const MatrixXcd& rho);
double mutual_information(const MatrixXcd& rho, int n, const std::vector<int>& region_a);
double conditional_mutual_information(const MatrixXcd& rho, const RegionSplit& split);

struct CorrelationProfile {
    std::vector<int> distances;
    std::vector<double> max_connected;  // max |<PQ> - <P><Q>| over Pauli pairs at each distance
    double xi = 0.0;                    // exp fit: max_connected ~ exp(-d/xi)
    double r_squared = 0.0;
    double log_amplitude = 0.0;
};
CorrelationProfile correlation_decay_profile(const MatrixXcd& rho, int n);

// Purification |psi> on [system, purifier]; purifier dimension = rank of rho
// (eigenvalues above 1e-14 of the max).
struct Purification {
    VectorXcd psi;
    int system_dim = 0;
    int purifier_dim = 0;
};
Purification purify(const MatrixXcd& rho);

}  // namespace thermix
