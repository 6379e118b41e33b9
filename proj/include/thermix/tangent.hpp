#pragma once

#include <string>
#include <vector>

#include "thermix/hamiltonian.hpp"
#include "thermix/mps.hpp"
#include "thermix/trotter.hpp"

namespace thermix {

// Coordinates of one variational parameter: entry (row, col) of m[phys] at
// `site`. The flat order is site-major, physical index next, then Eigen's
// column-major entry order within each slice.
struct ParamIndex {
    int site = 0;
    int phys = 0;
    long row = 0;
    long col = 0;
};

std::vector<ParamIndex> parameter_index(const Mps& psi);
VectorXcd parameter_vector(const Mps& psi);  // entries in flat order
Mps with_parameters_shifted(const Mps& psi, const VectorXcd& delta);

// Dense tangent frame of the MPS manifold at psi. Tangent vectors are exact:
// the amplitude is linear in every site tensor, so column i is the state with
// a unit tensor substituted at params[i], never a finite difference. The
// metric is singular by gauge freedom; `rank` counts eigenvalues above
// cutoff * max, and param_count() - rank is the gauge nullity.
struct TangentFrame {
    std::vector<ParamIndex> params;
    VectorXcd psi;       // dense state the frame was taken at
    MatrixXcd tangents;  // 2^n x P, column i = |d_i psi>
    MatrixXcd gram;      // tangents^dagger tangents
    double cutoff = 1e-10;
    int rank = 0;

    int param_count() const { return static_cast<int>(params.size()); }
    int gauge_nullity() const { return param_count() - rank; }
};

TangentFrame tangent_frame(const Mps& psi, double cutoff = 1e-10);  // n <= 8

// H|psi> split into E|psi> + h1^i |d_i psi> + h2^ij |d_i d_j psi>. h1 solves
// the tangent metric against <d_i psi|(H-E)|psi>; h2 solves the cross-site
// pair metric against the connected source, with the single-tangent content
// subtracted pairwise. Same-site pairs drop out because the amplitude is
// multilinear, so those second derivatives vanish identically. The residuals
// are exact least-squares distances of H|psi> from the nested spans and do
// not depend on the minimum-norm convention of the coefficients; for a
// nearest-neighbour H the order-2 residual sits at numerical zero.
struct ActionDecomposition {
    double energy = 0.0;
    VectorXcd h1;
    MatrixXcd h2;  // P x P, symmetric, zero on same-site blocks; empty at order 1
    double action_norm = 0.0;       // || H|psi> ||
    double tangent_residual = 0.0;  // distance from span{psi, tangents}
    double residual = 0.0;          // distance from the order-`order` span
    int metric_rank = 0;
    int pair_rank = 0;  // kept rank of the pair metric, 0 at order 1
    int order = 2;
};

ActionDecomposition decompose_action(const Mps& psi, const SpinChainHamiltonian& h,
                                     int order = 2, double cutoff = 1e-10);

// One explicit-midpoint step of the tangent drift A <- A - i dt h1; the norm
// is re-fixed to 1 afterwards. The exact flow conserves both, so the reported
// energy_change is pure integrator error, O(dt^3) per step.
struct DriftResult {
    Mps state;
    double energy_change = 0.0;
    double norm_defect = 0.0;  // |norm - 1| before the re-fix
};

DriftResult tdvp_drift_step(const Mps& psi, const SpinChainHamiltonian& h, double dt,
                            double cutoff = 1e-10);

enum class EvolveMethod { tdvp, tebd };

struct NamedObservable {
    std::string name = "Z";
    MatrixXcd op;  // 2^width x 2^width, slid over every placement
    int width = 1;
};

struct QuenchConfig {
    MatrixXcd u;  // local unitary applied to every term before evolving
    int first_site = 0;
    int u_width = 1;
    std::vector<double> times;  // ascending, >= 0; a 0 entry reports the quenched state
    double dt = 1e-3;
    EvolveMethod method = EvolveMethod::tdvp;
    int dmax = kUnlimitedBond;  // tebd truncation; tdvp keeps its manifold fixed
    double tol = 0.0;
    int trotter_order = 2;
    double cutoff = 1e-10;  // tdvp metric cutoff
    std::vector<NamedObservable> observables;  // empty = single-site Z

    void validate(int n) const;
};

struct TrajectoryRow {
    double time = 0.0;
    int site = 0;
    std::string observable;
    double mean = 0.0;
    double std_error = 0.0;
};

struct QuenchTrajectory {
    std::vector<TrajectoryRow> rows;  // time-major, then observable, then site
    std::string method;
    int dmax = 0;
};

// Applies u to every ensemble term, evolves the terms independently (in
// parallel up to thermix_threads(), merged in term order), and averages the
// observables over the ensemble at the requested times. Standard errors use
// the weighted estimator that reduces to s/sqrt(N) for uniform weights.
QuenchTrajectory quench_protocol(const MPSEnsemble& ensemble, const SpinChainHamiltonian& h,
                                 const QuenchConfig& cfg);

// Second-derivative coefficient matrix of the mixture evolution in the real
// coordinates (Re A, Im A): blocks [[Re c, Im c], [Im c, -Re c]] / 2 with
// c = -i h2. Mixed holomorphic/antiholomorphic derivatives never appear, so
// the matrix is traceless and can only be PSD when it vanishes entirely;
// the flag reports min eigenvalue >= -1e-10.
struct DiffusionCheck {
    VectorXd eigenvalues;  // ascending, dimension 2P
    double min_eigenvalue = 0.0;
    double max_eigenvalue = 0.0;
    double frobenius = 0.0;
    bool positive_semidefinite = false;
};

DiffusionCheck diffusion_matrix_check(const Mps& psi, const SpinChainHamiltonian& h,
                                      double cutoff = 1e-10);

}  // namespace thermix
