#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "thermix/hamiltonian.hpp"
#include "thermix/types.hpp"

namespace thermix {

// Site tensor with physical dimension 2; m[s] is the D_left x D_right matrix
// for physical index s. Open chains have bond dimension 1 at both ends.
struct SiteTensor {
    std::array<MatrixXcd, 2> m;

    long left_dim() const { return m[0].rows(); }
    long right_dim() const { return m[0].cols(); }
};

enum class CanonicalForm { none, left, right, mixed };

struct Mps {
    std::vector<SiteTensor> sites;
    Boundary boundary = Boundary::open;
    CanonicalForm form = CanonicalForm::none;
    int center = -1;  // orthogonality center when form != none

    int n() const { return static_cast<int>(sites.size()); }
    std::vector<int> bond_dims() const;  // n+1 entries, [D_0,...,D_n]
    int max_bond() const;
};

Mps product_state(const std::vector<VectorXcd>& site_vectors);

cxd amplitude(const Mps& psi, const std::string& bits);
VectorXcd to_dense(const Mps& psi);  // n <= 16

// Exact decomposition of a dense state (open boundary); dmax = 0 keeps every
// nonzero singular value, tol is an absolute cutoff on singular values of the
// normalized state. discarded_sq accumulates the squared truncation weight.
Mps mps_from_dense(const VectorXcd& v, int dmax = 0, double tol = 0.0,
                   double* discarded_sq = nullptr);

double mps_norm(const Mps& psi);
Mps normalized(const Mps& psi);

Mps canonicalize(const Mps& psi, CanonicalForm target, int center = -1);
void move_center(Mps& psi, int to);

// Sweeps left to right truncating every bond to (dmax, tol); the result is
// normalized, with `error` an upper bound on ||psi/|psi| - result|| and
// norm_factor the scalar mapping result back to the input amplitude.
struct TruncationResult {
    Mps state;
    double error = 0.0;
    double norm_factor = 1.0;
};
TruncationResult truncate(const Mps& psi, int dmax, double tol = 0.0);

struct SchmidtData {
    int cut = 0;           // bond between sites cut-1 and cut
    VectorXd values;       // descending, normalized state
    int rank(double tol = 1e-12) const;
};
SchmidtData schmidt_spectrum(const Mps& psi, int cut);

// Raw matrix elements; callers handle normalization.
cxd expectation(const Mps& psi, const MatrixXcd& op, int first_site, int width);
cxd overlap(const Mps& a, const Mps& b);  // <a|b>

double energy(const Mps& psi, const SpinChainHamiltonian& h);  // physical units, normalized

// Applies a (not necessarily unitary) two-site gate on (bond, bond+1) in mixed
// canonical gauge, truncates to (dmax, tol), and leaves the center at bond+1.
// Adds the squared relative discarded weight to *discarded_sq. If renormalize,
// the kept singular values are rescaled to unit norm and the removed log-norm
// is added to *log_norm.
void apply_two_site(Mps& psi, const MatrixXcd& gate, int bond, int dmax, double tol,
                    bool renormalize, double* discarded_sq = nullptr, double* log_norm = nullptr);

// width 1 or 2; checks unitarity, truncates as above for width 2.
Mps apply_local_unitary(const Mps& psi, const MatrixXcd& u, int first_site, int width,
                        int dmax = 0, double tol = 0.0, double* discarded_sq = nullptr);

// One-line JSON header followed by little-endian complex64 site payloads.
void save_mps(const std::string& path, const Mps& psi);
Mps load_mps(const std::string& path);

struct MPSEnsemble {
    std::vector<double> weights;
    std::vector<Mps> states;
    std::string generator;
    std::uint64_t seed = 0;
    double beta = 0.0;
    std::vector<int> walker;  // optional per-state provenance (parallel to states)
    std::vector<long> step;
};

MatrixXcd ensemble_density(const MPSEnsemble& e);  // n <= 10

}  // namespace thermix
