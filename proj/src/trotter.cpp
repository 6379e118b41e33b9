#include "thermix/trotter.hpp"

#include <cmath>

#include "thermix/dense_oracle.hpp"
#include "thermix/registers.hpp"

namespace thermix {

namespace {

// Physical-units bond matrices with single-site fields folded in.
std::vector<MatrixXcd> bond_matrices(const SpinChainHamiltonian& h) {
    if (h.boundary != Boundary::open)
        throw config_error("trotter gates support open boundary only");
    if (h.n < 2) throw config_error("trotter gates need at least one bond");
    const MatrixXcd id = MatrixXcd::Identity(2, 2);
    std::vector<MatrixXcd> bonds(h.n - 1, MatrixXcd::Zero(4, 4));
    for (const auto& t : h.terms) {
        const MatrixXcd op = h.energy_scale * t.op;
        if (t.width == 2) {
            bonds[t.first_site] += op;
            continue;
        }
        const int k = t.first_site;
        if (k == 0) {
            bonds[0] += kron(op, id);
        } else if (k == h.n - 1) {
            bonds[h.n - 2] += kron(id, op);
        } else {
            bonds[k] += 0.5 * kron(op, id);
            bonds[k - 1] += 0.5 * kron(id, op);
        }
    }
    return bonds;
}

}  // namespace

TrotterGateSet trotter_gates(const SpinChainHamiltonian& h, double dt, int order, bool imaginary) {
    if (order != 1 && order != 2) throw config_error("trotter order must be 1 or 2");
    if (h.max_term_width() > 2) throw config_error("terms wider than 2 sites are unsupported");
    const auto bonds = bond_matrices(h);

    auto exp_gate = [&](const MatrixXcd& m, double tau) {
        if (imaginary) return herm_exp(m, -tau);
        // exp(-i m tau) via the spectral decomposition of the Hermitian bond matrix.
        Eigen::SelfAdjointEigenSolver<MatrixXcd> es(m);
        VectorXcd phase(es.eigenvalues().size());
        for (long i = 0; i < phase.size(); ++i)
            phase(i) = std::exp(cxd(0.0, -tau * es.eigenvalues()(i)));
        return MatrixXcd(es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint());
    };

    TrotterGateSet out;
    out.dt = dt;
    out.order = order;
    out.imaginary = imaginary;
    auto pass = [&](int parity, double tau) {
        for (int b = parity; b < static_cast<int>(bonds.size()); b += 2)
            out.gates.push_back({b, exp_gate(bonds[b], tau)});
    };
    if (order == 1) {
        pass(0, dt);
        pass(1, dt);
    } else {
        pass(0, 0.5 * dt);
        pass(1, dt);
        pass(0, 0.5 * dt);
    }
    return out;
}

EvolutionResult evolve(const Mps& psi, const TrotterGateSet& gates, int steps, int dmax,
                       double tol) {
    if (dmax < 1) throw config_error("Dmax must be at least 1");
    if (steps < 0) throw config_error("steps must be nonnegative");

    EvolutionResult out;
    out.state = psi;
    double disc = 0.0;
    for (int step = 0; step < steps; ++step)
        for (const auto& g : gates.gates)
            apply_two_site(out.state, g.op, g.bond, dmax, tol, gates.imaginary, &disc,
                           &out.log_norm);
    out.truncation_error = std::sqrt(disc);
    for (const auto& site : out.state.sites)
        for (int s = 0; s < 2; ++s)
            if (!site.m[s].allFinite()) throw numerical_error("evolution diverged");
    return out;
}

}  // namespace thermix
