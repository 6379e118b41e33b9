#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>

#include "thermix/hamiltonian.hpp"
#include "thermix/mps.hpp"
#include "thermix/rng.hpp"

namespace thermix {

enum class MeasBasis { z, x };
enum class BasisSchedule { alternating, fixed_z };

struct ChainConfig {
    double beta = 1.0;
    long steps = 0;
    long burn_in = 10;
    int dmax = 64;
    double tol = 1e-8;
    BasisSchedule schedule = BasisSchedule::alternating;
    std::uint64_t seed = 0;
    int walkers = 1;
    double dt = 0.025;  // imaginary-time step for the beta/2 half evolution
    int trotter_order = 2;

    void validate() const;
};

struct MettsSample {
    std::string basis_string;  // string that generated the state
    MeasBasis string_basis = MeasBasis::z;
    Mps state;                 // normalized
    double log_weight = 0.0;   // log of the un-normalized weight |exp(-beta H/2)|i>|^2
    MeasBasis collapse_basis = MeasBasis::z;
    std::string next_string;   // collapse outcome, feeds the next step
    double collapse_probability = 0.0;
    long step = 0;
    double truncation_error = 0.0;
};

// Sequential site-by-site projective measurement; the returned probability is
// |<outcome|psi>|^2.
std::pair<std::string, double> collapse_to_product(const Mps& psi, MeasBasis basis,
                                                   RngStream& rng);

Mps product_from_string(const std::string& bits, MeasBasis basis);

// Basis the collapse at `step` uses, and the basis the incoming string of
// `step` lives in (step 0 strings are always Z).
MeasBasis collapse_basis_for(BasisSchedule schedule, long step);
MeasBasis string_basis_for(BasisSchedule schedule, long step);

MettsSample metts_step(const std::string& bits, long step, const ChainConfig& cfg,
                       const SpinChainHamiltonian& h, RngStream& rng);

// Invokes sink for every post-burn-in sample, walker-major; bit-identical for
// a fixed seed regardless of how run_chain distributes walkers over threads.
using SampleSink = std::function<void(const MettsSample&, int walker)>;
void run_chain_stream(const ChainConfig& cfg, const SpinChainHamiltonian& h,
                      const SampleSink& sink);

// Collects the streamed samples into a uniform-weight ensemble. Walkers run in
// parallel up to thermix_threads(); the merge order is fixed by walker id.
MPSEnsemble run_chain(const ChainConfig& cfg, const SpinChainHamiltonian& h);

// Dense enumeration check of the thermal-mixture identity; n <= 6.
double verify_metts_identity(const SpinChainHamiltonian& h, double beta);

struct ObservableEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    double tau_int = 0.0;  // batch-means integrated autocorrelation estimate
    bool se_defined = false;
};
ObservableEstimate estimate_observable(const MPSEnsemble& ensemble, const MatrixXcd& op,
                                       int first_site, int width);

}  // namespace thermix
