#pragma once

#include <vector>

#include "thermix/dense_oracle.hpp"
#include "thermix/hamiltonian.hpp"
#include "thermix/types.hpp"

// Dense Markov-recovery machinery: belief-propagation bridge operators,
// recovery channels (Petz and the bridge-based K-map), Stinespring dilations,
// and error-decay profiles over buffer sizes. Everything lives on the full
// 2^n space, so n <= 10 throughout.

namespace thermix {

// P = e^{-H/2T} (e^{-H_al/T} (x) e^{-H_rg/T})^{-1/2} for the tripartition
// alpha | beta_L beta_R | gamma, where the two factors drop every term
// crossing the beta_L/beta_R cut. Conjugating the factor product by P then
// reproduces e^{-H/T} up to floating-point error; truncating P to a window
// around the cut is what introduces a real defect.
struct BridgeOperator {
    MatrixXcd p;  // 2^n x 2^n; support limited to the window once truncated
    RegionSplit split;
    int cut = 0;           // first beta_R site; beta_L gets the extra site when |beta| is odd
    double temperature = 0.0;
    int window = 0;        // sites with non-identity support (n when untruncated)
    int window_start = 0;
    double condition_number = 0.0;
    int clamped_eigenvalues = 0;  // factor eigenvalues zeroed by the inverse-sqrt clamp
    double defect = 0.0;             // || e^{-H/T} - P (factors) P^dag ||_1
    double defect_normalized = 0.0;  // same, divided by Z = Tr e^{-H/T}
};

BridgeOperator bridge_operator(const SpinChainHamiltonian& h, const RegionSplit& split,
                               double temperature);

// Restricts the bridge to `window` sites centred on the beta_L/beta_R cut by
// averaging P over the outside sites (partial trace / d_outside, identity
// elsewhere). window must be even; window = n reproduces the input bridge.
BridgeOperator truncate_bridge(const SpinChainHamiltonian& h, const BridgeOperator& bridge,
                               int window);

enum class RecoveryFlavor { petz, kmap_completed };

// Channel from beta into beta+gamma, stored as Kraus operators of shape
// d_out x d_in with the chain's register order (beta sites then gamma sites).
struct RecoveryChannel {
    std::vector<MatrixXcd> kraus;
    RecoveryFlavor flavor = RecoveryFlavor::petz;
    RegionSplit split;
    double temperature = 0.0;
    int d_in = 0;
    int d_out = 0;
    // K-map only: trace-preserving completion X |-> Tr[pick X] * state. Kept in
    // this closed form because its Kraus rank is d_in * d_out; expanded to
    // explicit operators only where unavoidable (Stinespring).
    MatrixXcd completion_pick;   // PSD weight operator on the input, 1 - sum K^dag K
    MatrixXcd completion_state;  // prepared marginal on the output

    bool has_completion() const { return completion_pick.size() != 0; }
};

MatrixXcd apply_recovery(const RecoveryChannel& ch, const MatrixXcd& x);
std::vector<MatrixXcd> completion_kraus(const RecoveryChannel& ch);  // empty when absent
double trace_preservation_defect(const RecoveryChannel& ch);  // ||sum K^dag K - 1||_inf
MatrixXcd choi_matrix(const RecoveryChannel& ch);  // sum_k vec(K_k) vec(K_k)^dag, column-major vec

// Mutually orthogonal Kraus set with the same action: the eigen-decomposition
// of the channel's Choi matrix, computed through the Gram matrix of the input
// set. Members with eigenvalue <= clamp * max are dropped, so the result size
// is the Kraus (Choi) rank.
std::vector<MatrixXcd> canonical_kraus(const std::vector<MatrixXcd>& kraus, double clamp = 1e-14);

// Petz recovery for the state's own marginals:
// X |-> rho_bg^{1/2} (rho_b^{-1/2} X rho_b^{-1/2} (x) 1_g) rho_bg^{1/2}.
// Trace preserving by construction; throws numerical_error if rho_beta is
// rank deficient beyond the clamp.
RecoveryChannel petz_recovery_from_state(const MatrixXcd& rho, const RegionSplit& split,
                                         double clamp = 1e-14);
RecoveryChannel petz_recovery(const SpinChainHamiltonian& h, const RegionSplit& split,
                              double temperature, double clamp = 1e-14);

// Same map when the reconstructed register sits BETWEEN the two buffer
// halves. rho_window lives on the ordered registers (left, mid, right); the
// returned canonical Kraus set maps d_left*d_right inputs to the full window,
// inserting the recreated mid register in place. d_right = 1 reduces to the
// tail geometry above.
std::vector<MatrixXcd> petz_kraus_between(const MatrixXcd& rho_window, int d_left, int d_mid,
                                          int d_right, double clamp = 1e-14);

// Bridge-based map X |-> P (Tr_bR[P^-1 X P^-dag] (x) rho_{H_rg}) P^dag with P
// restricted to the largest even window inside beta, rescaled to be trace
// non-increasing and completed by one branch preparing the Gibbs marginal on
// beta+gamma.
RecoveryChannel k_map(const BridgeOperator& bridge, const SpinChainHamiltonian& h,
                      double temperature);

// Trace distance between rho and (id_alpha (x) channel)(rho_alphabeta).
double recovery_error(const MatrixXcd& rho, const RecoveryChannel& ch, const RegionSplit& split);

// Same distance for the success branch alone (completion ignored), with the
// output renormalized by its trace. This is the number the K-map earns under
// its repeat-until-success reading: the map recovers the state conditioned on
// success, while the completion branch merely restores trace preservation.
double recovery_error_conditional(const MatrixXcd& rho, const RecoveryChannel& ch,
                                  const RegionSplit& split);

// Least-squares fit log(err) ~ log_amplitude - rate * x over points with
// err > 1e-15; points counts how many entered the fit.
struct ExpFit {
    double rate = 0.0;
    double log_amplitude = 0.0;
    double r_squared = 0.0;
    int points = 0;
};

struct RecoveryProfile {
    std::vector<int> buffer_sizes;  // |beta|, centred in the chain
    std::vector<double> petz_errors;
    std::vector<double> cmis;
    std::vector<double> kmap_errors;      // conditional (success-branch) errors, only with k-map
    std::vector<double> bridge_defects;   // normalized defects, only with k-map
    ExpFit fit_linear;  // decay in |beta|
    ExpFit fit_sqrt;    // decay in sqrt(|beta|)
    bool monotone_nonincreasing = false;
};

RecoveryProfile recovery_profile(const SpinChainHamiltonian& h, double temperature,
                                 const std::vector<int>& buffer_sizes, bool with_kmap = false);

// V = sum_j B_j (x) |j>_env for the canonical Kraus set B, so the environment
// dimension is the Kraus rank and Tr_env[V X V^dag] reproduces the channel.
// The environment register sits at the back (least significant factor).
struct StinespringResult {
    MatrixXcd v;  // (d_out * env_dim) x d_in isometry
    int env_dim = 0;
    int d_in = 0;
    int d_out = 0;
};

StinespringResult stinespring(const RecoveryChannel& ch);

// The same isometry for a Kraus set taken as given (no canonicalization), so
// the environment dimension is kraus.size().
MatrixXcd stinespring_isometry(const std::vector<MatrixXcd>& kraus);

}  // namespace thermix
