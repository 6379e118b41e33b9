#pragma once

#include <cstdint>
#include <vector>

#include "thermix/hamiltonian.hpp"
#include "thermix/mps.hpp"
#include "thermix/types.hpp"

// Builds a Gibbs state as an explicit convex combination of pure matrix
// product states: tile the chain into A|B|C blocks, purify each A_iB_i
// marginal, recreate every C_i from its flanking buffers B_i and A_{i+1}
// through the minimal isometric dilation of a recovery channel, and condition
// all purifier and dilation registers on the computational basis. Post-
// selection on a local basis cannot raise Schmidt ranks, so each surviving
// branch inherits the rank bookkeeping of the dilated circuit, and the
// distance to the Gibbs state telescopes into per-block channel errors plus
// per-seam decoupling errors, both measured exactly on the dense oracle.

namespace thermix {

struct Block {
    int a_start = 0;
    int b_start = 0;
    int c_start = 0;
    int c_end = 0;  // one past the last C site; == c_start when C is empty

    int a_width() const { return b_start - a_start; }
    int b_width() const { return c_start - b_start; }
    int c_width() const { return c_end - c_start; }
};

struct BlockingPlan {
    int n = 0;
    int block_sites = 0;  // sites in each A_i and each B_i
    int c_width = 0;      // sites in each C_i
    std::vector<Block> blocks;

    // Register bookkeeping: purifier dimension per block (= dim of A_iB_i)
    // and the generic dilation-register dimension (channel input dimension
    // squared times the created-register dimension). The build itself uses
    // minimal dilations, whose environments are the measured Kraus ranks.
    std::vector<long> purifier_dims;
    std::vector<long> dilation_dims;

    // Asymptotic sizing echoed for reference, never enforced at this scale:
    // the block-length prescription ceil(ln^2(n/eps)) and the worst-case bond
    // dimension implied by the register bookkeeping, flagged vacuous once it
    // reaches the maximal Schmidt rank of an n-qubit state.
    double eps_reference = 0.0;
    int prescribed_block_sites = 0;
    long bond_bound = 0;
    bool bond_bound_vacuous = false;

    int count() const { return static_cast<int>(blocks.size()); }
};

// Deterministic tiling A_1 B_1 C_1 ... A_I B_I C_I. Throws config_error when
// the widths do not tile n exactly or the dense limit n <= 10 is exceeded.
BlockingPlan plan_blocks(int n, int block_sites, int c_width, double eps_reference = 1e-2);

// Branch j is the ancilla computational-basis string j (purifier and
// environment registers interleaved in block order, register 0 most
// significant), so the enumeration is deterministic for a fixed plan.
struct MixtureEnsemble {
    std::vector<double> weights;
    std::vector<Mps> terms;        // exact (untruncated) decompositions
    std::vector<VectorXcd> dense;  // the same states as dense vectors
};

struct RankAudit {
    std::vector<long> cut_bounds;              // per chain cut 1..n-1
    std::vector<std::vector<int>> term_ranks;  // [term][cut]
    int max_rank = 0;
    long max_bound = 0;
    bool satisfied = false;
};

struct MixtureAudit {
    double weight_sum = 0.0;
    int terms = 0;
    double trace_distance = 0.0;            // mixture vs the dense Gibbs state
    std::vector<double> block_errors;       // channel applied to the true marginal
    std::vector<double> decoupling_errors;  // next A_{i+1}B_{i+1} vs product
    double telescoping = 0.0;
    double reconstruction_defect = 0.0;  // mixture vs the Kraus-composed state
    std::vector<int> kraus_ranks;        // canonical rank per channel; 0 = skipped
    RankAudit ranks;
};

struct MixtureBuild {
    MixtureEnsemble ensemble;
    MixtureAudit audit;
};

// Runs the construction on the Gibbs state of h at the given temperature.
// Branches with weight <= drop_tol are discarded, so the kept weights sum to
// one up to the dropped mass. C-less plans skip the channels entirely and
// reduce to conditioned block purifications.
MixtureBuild build_mixture(const SpinChainHamiltonian& h, double temperature,
                           const BlockingPlan& plan, double drop_tol = 1e-14);

// Sum of all measured errors; the decoupling list may be one entry shorter
// (the last block glues nothing to its right).
double telescoping_bound(const std::vector<double>& block_errors,
                         const std::vector<double>& decoupling_errors);

// Checks every term's Schmidt rank at every cut against the bound propagated
// through the construction: the purification rank across the cut times
// (input dimension * Kraus rank) of the one channel whose window straddles
// it. kraus_ranks uses 0 for skipped channels.
RankAudit schmidt_rank_audit(const MixtureEnsemble& ensemble, const BlockingPlan& plan,
                             const std::vector<int>& kraus_ranks, double tol = 1e-10);

// Randomized check that post-selection cannot raise the Schmidt rank: unitary
// branches preserve it exactly, trace-preserving local Kraus branches stay
// within the input rank, and operators assembled with cut rank s stay within
// s times the input rank.
struct SloccCheck {
    int trials = 0;
    int failures = 0;
    int max_rank_seen = 0;

    bool passed() const { return trials > 0 && failures == 0; }
};
SloccCheck verify_slocc_monotonicity(int trials, std::uint64_t seed);

}  // namespace thermix
