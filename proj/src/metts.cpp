#include "thermix/metts.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <thread>
#include <vector>

#include "thermix/dense_oracle.hpp"
#include "thermix/pauli.hpp"
#include "thermix/threads.hpp"
#include "thermix/trotter.hpp"

namespace thermix {

void ChainConfig::validate() const {
    if (beta <= 0.0) throw config_error("beta must be positive");
    if (burn_in < 0 || steps <= burn_in) throw config_error("steps must exceed burn-in >= 0");
    if (dmax < 1) throw config_error("Dmax must be at least 1");
    if (walkers < 1) throw config_error("walkers must be >= 1");
    if (dt <= 0.0) throw config_error("dt must be positive");
    if (trotter_order != 1 && trotter_order != 2) throw config_error("trotter order must be 1 or 2");
}

MeasBasis collapse_basis_for(BasisSchedule schedule, long step) {
    if (schedule == BasisSchedule::fixed_z) return MeasBasis::z;
    return step % 2 == 0 ? MeasBasis::x : MeasBasis::z;
}

MeasBasis string_basis_for(BasisSchedule schedule, long step) {
    return step == 0 ? MeasBasis::z : collapse_basis_for(schedule, step - 1);
}

Mps product_from_string(const std::string& bits, MeasBasis basis) {
    std::vector<VectorXcd> site_vectors;
    site_vectors.reserve(bits.size());
    for (char c : bits) {
        if (c != '0' && c != '1') throw config_error("basis strings are over {0,1}");
        site_vectors.push_back(basis == MeasBasis::z ? basis_vector_z(c - '0')
                                                     : basis_vector_x(c - '0'));
    }
    return product_state(site_vectors);
}

std::pair<std::string, double> collapse_to_product(const Mps& psi, MeasBasis basis,
                                                   RngStream& rng) {
    Mps work = canonicalize(psi, CanonicalForm::right);
    const int n = work.n();
    MatrixXcd l = MatrixXcd::Ones(1, 1);
    std::string bits;
    bits.reserve(n);
    for (int k = 0; k < n; ++k) {
        const auto& a = work.sites[k];
        MatrixXcd w[2];
        double p[2];
        for (int o = 0; o < 2; ++o) {
            const VectorXcd bv = basis == MeasBasis::z ? basis_vector_z(o) : basis_vector_x(o);
            w[o] = std::conj(bv(0)) * (l * a.m[0]) + std::conj(bv(1)) * (l * a.m[1]);
            p[o] = w[o].squaredNorm();
        }
        const double tot = p[0] + p[1];
        if (!(tot > 1e-300)) throw numerical_error("collapse hit a zero-weight branch");
        const int o = rng.next_double() * tot < p[0] ? 0 : 1;
        bits.push_back(static_cast<char>('0' + o));
        l = std::move(w[o]);
    }
    return {bits, l.squaredNorm()};
}

MettsSample metts_step(const std::string& bits, long step, const ChainConfig& cfg,
                       const SpinChainHamiltonian& h, RngStream& rng) {
    cfg.validate();
    if (static_cast<int>(bits.size()) != h.n) throw config_error("string length mismatch");

    MettsSample out;
    out.basis_string = bits;
    out.string_basis = string_basis_for(cfg.schedule, step);
    out.step = step;

    const Mps start = product_from_string(bits, out.string_basis);
    const double half_beta = 0.5 * cfg.beta;
    const int n_steps = std::max(1L, std::lround(half_beta / cfg.dt));
    const double tau = half_beta / n_steps;
    const auto gates = trotter_gates(h, tau, cfg.trotter_order, true);
    auto evolved = evolve(start, gates, n_steps, cfg.dmax, cfg.tol);

    out.state = normalized(evolved.state);
    out.log_weight = 2.0 * evolved.log_norm;
    out.truncation_error = evolved.truncation_error;
    out.collapse_basis = collapse_basis_for(cfg.schedule, step);
    auto [next, prob] = collapse_to_product(out.state, out.collapse_basis, rng);
    out.next_string = std::move(next);
    out.collapse_probability = prob;
    return out;
}

namespace {

void run_walker(const ChainConfig& cfg, const SpinChainHamiltonian& h, int walker,
                const SampleSink& sink) {
    RngStream rng = RngStream::derive(cfg.seed, static_cast<std::uint64_t>(walker));
    std::string bits(h.n, '0');
    for (int k = 0; k < h.n; ++k) bits[k] = rng.next_below(2) ? '1' : '0';
    for (long step = 0; step < cfg.steps; ++step) {
        MettsSample sample = metts_step(bits, step, cfg, h, rng);
        bits = sample.next_string;
        if (step >= cfg.burn_in) sink(sample, walker);
    }
}

}  // namespace

void run_chain_stream(const ChainConfig& cfg, const SpinChainHamiltonian& h,
                      const SampleSink& sink) {
    cfg.validate();
    for (int w = 0; w < cfg.walkers; ++w) run_walker(cfg, h, w, sink);
}

MPSEnsemble run_chain(const ChainConfig& cfg, const SpinChainHamiltonian& h) {
    cfg.validate();
    MPSEnsemble e;
    e.generator = "metts";
    e.seed = cfg.seed;
    e.beta = cfg.beta;

    auto collect = [&](const MettsSample& s, int walker) {
        e.states.push_back(s.state);
        e.walker.push_back(walker);
        e.step.push_back(s.step);
    };

    const int nthreads = std::min(thermix_threads(), cfg.walkers);
    if (nthreads <= 1) {
        run_chain_stream(cfg, h, collect);
    } else {
        // Walkers draw from independent streams, so any schedule yields the
        // same per-walker sample sequences; merging by walker id fixes the order.
        std::vector<std::future<std::vector<MettsSample>>> futs;
        futs.reserve(cfg.walkers);
        for (int w = 0; w < cfg.walkers; ++w)
            futs.push_back(std::async(std::launch::deferred | std::launch::async,
                                      [&cfg, &h, w] {
                                          std::vector<MettsSample> buf;
                                          run_walker(cfg, h, w,
                                                     [&buf](const MettsSample& s, int) {
                                                         buf.push_back(s);
                                                     });
                                          return buf;
                                      }));
        for (int w = 0; w < cfg.walkers; ++w)
            for (auto& s : futs[w].get()) collect(s, w);
    }
    e.weights.assign(e.states.size(), 1.0 / static_cast<double>(e.states.size()));
    return e;
}

double verify_metts_identity(const SpinChainHamiltonian& h, double beta) {
    if (h.n > 6) throw config_error("identity check limited to n <= 6");
    if (beta <= 0.0) throw config_error("beta must be positive");
    const long d = 1L << h.n;
    const MatrixXcd half = herm_exp(assemble_dense_physical(h), -0.5 * beta);

    // Enumerate phi_i = p(i)^{-1/2} exp(-beta H/2)|i> over all basis strings.
    MatrixXcd acc = MatrixXcd::Zero(d, d);
    double z = 0.0;
    for (long i = 0; i < d; ++i) {
        const VectorXcd col = half.col(i);
        const double weight = col.squaredNorm();
        if (weight <= 0.0) continue;
        const VectorXcd phi = col / std::sqrt(weight);
        acc.noalias() += weight * (phi * phi.adjoint());
        z += weight;
    }
    acc /= z;
    return trace_distance(acc, gibbs_state(h, 1.0 / beta).rho);
}

ObservableEstimate estimate_observable(const MPSEnsemble& ensemble, const MatrixXcd& op,
                                       int first_site, int width) {
    const size_t n = ensemble.states.size();
    if (n == 0 || ensemble.weights.size() != n)
        throw config_error("estimate needs a nonempty weighted ensemble");

    std::vector<double> obs(n);
    double wsum = 0.0, mean = 0.0;
    for (size_t t = 0; t < n; ++t) {
        const auto& psi = ensemble.states[t];
        const double n2 = cxd(overlap(psi, psi)).real();
        if (n2 <= 0.0) throw numerical_error("zero-norm ensemble member");
        const double val = expectation(psi, op, first_site, width).real() / n2;
        obs[t] = val;
        wsum += ensemble.weights[t];
        mean += ensemble.weights[t] * val;
    }
    mean /= wsum;

    ObservableEstimate out;
    out.mean = mean;
    if (n < 2) return out;

    // Group by walker when provenance is recorded; otherwise one sequence.
    std::vector<std::vector<double>> groups;
    if (ensemble.walker.size() == n) {
        const int wmax = *std::max_element(ensemble.walker.begin(), ensemble.walker.end());
        groups.resize(wmax + 1);
        for (size_t t = 0; t < n; ++t) groups[ensemble.walker[t]].push_back(obs[t]);
    } else {
        groups.push_back(obs);
    }

    std::vector<double> batch_means;
    double batch_len_sum = 0.0;
    for (const auto& g : groups) {
        if (g.empty()) continue;
        const long m = std::max(1L, static_cast<long>(std::floor(std::sqrt(double(g.size())))));
        const long nb = static_cast<long>(g.size()) / m;
        for (long b = 0; b < nb; ++b) {
            double acc = 0.0;
            for (long i = b * m; i < (b + 1) * m; ++i) acc += g[i];
            batch_means.push_back(acc / m);
            batch_len_sum += m;
        }
    }
    if (batch_means.size() < 2) return out;

    double var_sample = 0.0;
    for (double v : obs) var_sample += (v - mean) * (v - mean);
    var_sample /= (n - 1);

    double bmean = 0.0;
    for (double b : batch_means) bmean += b;
    bmean /= batch_means.size();
    double var_batch = 0.0;
    for (double b : batch_means) var_batch += (b - bmean) * (b - bmean);
    var_batch /= (batch_means.size() - 1);

    out.std_error = std::sqrt(var_batch / batch_means.size());
    const double mbar = batch_len_sum / batch_means.size();
    out.tau_int = var_sample > 1e-300 ? mbar * var_batch / var_sample
                                      : std::numeric_limits<double>::quiet_NaN();
    out.se_defined = true;
    return out;
}

}  // namespace thermix
