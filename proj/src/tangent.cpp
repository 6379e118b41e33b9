#include "thermix/tangent.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <utility>

#include "thermix/pauli.hpp"
#include "thermix/threads.hpp"

namespace thermix {

namespace {

void check_cutoff(double cutoff) {
    if (!(cutoff > 0.0) || cutoff >= 1.0) throw config_error("metric cutoff must be in (0, 1)");
}

// L[k]: 2^k x D_k, rows indexed by the physical prefix, site 0 most significant.
std::vector<MatrixXcd> left_envs(const Mps& psi) {
    const int n = psi.n();
    std::vector<MatrixXcd> l(n + 1);
    l[0] = MatrixXcd::Ones(1, 1);
    for (int k = 0; k < n; ++k) {
        const auto& t = psi.sites[k];
        MatrixXcd cur(l[k].rows() * 2, t.right_dim());
        for (int s = 0; s < 2; ++s) {
            const MatrixXcd block = l[k] * t.m[s];
            for (long p = 0; p < l[k].rows(); ++p) cur.row(2 * p + s) = block.row(p);
        }
        l[k + 1] = std::move(cur);
    }
    return l;
}

// R[k]: D_k x 2^{n-k}, columns indexed by the physical suffix starting at k.
std::vector<MatrixXcd> right_envs(const Mps& psi) {
    const int n = psi.n();
    std::vector<MatrixXcd> r(n + 1);
    r[n] = MatrixXcd::Ones(1, 1);
    for (int k = n - 1; k >= 0; --k) {
        const auto& t = psi.sites[k];
        const long w = 1L << (n - 1 - k);
        MatrixXcd cur(t.left_dim(), 2 * w);
        for (int s = 0; s < 2; ++s) cur.middleCols(s * w, w) = t.m[s] * r[k + 1];
        r[k] = std::move(cur);
    }
    return r;
}

int eig_rank(const VectorXd& eigenvalues, double cutoff) {
    const double mx = eigenvalues.size() > 0 ? std::max(0.0, eigenvalues.maxCoeff()) : 0.0;
    int rank = 0;
    for (long i = 0; i < eigenvalues.size(); ++i)
        if (eigenvalues(i) > cutoff * mx && eigenvalues(i) > 0.0) ++rank;
    return rank;
}

// Minimum-norm solve of gram * c = b through the eigenvalue pseudo-inverse.
VectorXcd gram_pinv_solve(const MatrixXcd& gram, const VectorXcd& b, double cutoff,
                          int* rank_out) {
    if (gram.rows() == 0) {
        *rank_out = 0;
        return VectorXcd::Zero(0);
    }
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(gram);
    if (es.info() != Eigen::Success) throw numerical_error("metric eigendecomposition failed");
    const VectorXd& ev = es.eigenvalues();
    const double thresh = cutoff * std::max(0.0, ev.maxCoeff());
    VectorXcd scaled = es.eigenvectors().adjoint() * b;
    int rank = 0;
    for (long i = 0; i < ev.size(); ++i) {
        if (ev(i) > thresh && ev(i) > 0.0) {
            scaled(i) /= ev(i);
            ++rank;
        } else {
            scaled(i) = 0.0;
        }
    }
    if (rank == 0) throw numerical_error("pseudo-inverse cutoff consumed the whole metric");
    *rank_out = rank;
    return es.eigenvectors() * scaled;
}

// Exact least-squares distance of target from the column span of basis.
double least_squares_residual(const MatrixXcd& basis, const VectorXcd& target) {
    Eigen::CompleteOrthogonalDecomposition<MatrixXcd> cod(basis);
    return (target - basis * cod.solve(target)).norm();
}

}  // namespace

std::vector<ParamIndex> parameter_index(const Mps& psi) {
    std::vector<ParamIndex> out;
    for (int k = 0; k < psi.n(); ++k) {
        const long dl = psi.sites[k].left_dim();
        const long dr = psi.sites[k].right_dim();
        for (int s = 0; s < 2; ++s)
            for (long c = 0; c < dr; ++c)
                for (long r = 0; r < dl; ++r) out.push_back({k, s, r, c});
    }
    return out;
}

VectorXcd parameter_vector(const Mps& psi) {
    const auto idx = parameter_index(psi);
    VectorXcd out(static_cast<long>(idx.size()));
    for (size_t i = 0; i < idx.size(); ++i)
        out(static_cast<long>(i)) = psi.sites[idx[i].site].m[idx[i].phys](idx[i].row, idx[i].col);
    return out;
}

Mps with_parameters_shifted(const Mps& psi, const VectorXcd& delta) {
    const auto idx = parameter_index(psi);
    if (delta.size() != static_cast<long>(idx.size()))
        throw config_error("parameter shift has the wrong length");
    Mps out = psi;
    for (size_t i = 0; i < idx.size(); ++i)
        out.sites[idx[i].site].m[idx[i].phys](idx[i].row, idx[i].col) +=
            delta(static_cast<long>(i));
    out.form = CanonicalForm::none;
    out.center = -1;
    return out;
}

TangentFrame tangent_frame(const Mps& psi, double cutoff) {
    const int n = psi.n();
    if (n < 1 || n > 8) throw config_error("dense tangent frames are limited to 1 <= n <= 8");
    if (psi.boundary != Boundary::open)
        throw config_error("tangent frames need an open-boundary state");
    check_cutoff(cutoff);

    TangentFrame frame;
    frame.cutoff = cutoff;
    frame.params = parameter_index(psi);
    frame.psi = to_dense(psi);

    const auto lenv = left_envs(psi);
    const auto renv = right_envs(psi);
    const long dim = 1L << n;
    frame.tangents = MatrixXcd::Zero(dim, static_cast<long>(frame.params.size()));
    long col = 0;
    for (int k = 0; k < n; ++k) {
        const long dl = psi.sites[k].left_dim();
        const long dr = psi.sites[k].right_dim();
        const long wl = 1L << k;
        const long wr = 1L << (n - k - 1);
        for (int s = 0; s < 2; ++s)
            for (long c = 0; c < dr; ++c)
                for (long r = 0; r < dl; ++r, ++col)
                    for (long p = 0; p < wl; ++p) {
                        const cxd lp = lenv[k](p, r);
                        if (lp == 0.0) continue;
                        frame.tangents.col(col).segment(p * 2 * wr + s * wr, wr) =
                            lp * renv[k + 1].row(c).transpose();
                    }
    }
    frame.gram = frame.tangents.adjoint() * frame.tangents;

    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(frame.gram);
    if (es.info() != Eigen::Success) throw numerical_error("metric eigendecomposition failed");
    frame.rank = eig_rank(es.eigenvalues(), cutoff);
    return frame;
}

ActionDecomposition decompose_action(const Mps& psi, const SpinChainHamiltonian& h, int order,
                                     double cutoff) {
    if (order != 1 && order != 2) throw config_error("decomposition order must be 1 or 2");
    if (h.n != psi.n()) throw config_error("hamiltonian and state disagree on the chain length");

    TangentFrame frame = tangent_frame(psi, cutoff);
    if (std::abs(frame.psi.norm() - 1.0) > 1e-8)
        throw config_error("decompose_action expects a normalized state");

    const MatrixXcd hd = assemble_dense_physical(h);
    const VectorXcd hpsi = hd * frame.psi;
    const long pcount = frame.tangents.cols();

    ActionDecomposition out;
    out.order = order;
    out.action_norm = hpsi.norm();
    out.energy = frame.psi.dot(hpsi).real();

    const VectorXcd y = hpsi - out.energy * frame.psi;
    const VectorXcd b1 = frame.tangents.adjoint() * y;
    out.h1 = gram_pinv_solve(frame.gram, b1, cutoff, &out.metric_rank);

    MatrixXcd basis(frame.psi.size(), 1 + pcount);
    basis.col(0) = frame.psi;
    basis.rightCols(pcount) = frame.tangents;
    out.tangent_residual = least_squares_residual(basis, hpsi);

    if (order == 1) {
        out.residual = out.tangent_residual;
        return out;
    }

    // Cross-site pair columns by unit substitution at both sites; columns that
    // contract to zero (mismatched bond units on an empty middle) are dropped.
    std::vector<std::pair<long, long>> pairs;
    std::vector<VectorXcd> cols;
    const auto& idx = frame.params;
    for (long i = 0; i < pcount; ++i)
        for (long j = i + 1; j < pcount; ++j) {
            if (idx[i].site == idx[j].site) continue;
            Mps sub = psi;
            for (int s = 0; s < 2; ++s) {
                sub.sites[idx[i].site].m[s].setZero();
                sub.sites[idx[j].site].m[s].setZero();
            }
            sub.sites[idx[i].site].m[idx[i].phys](idx[i].row, idx[i].col) = 1.0;
            sub.sites[idx[j].site].m[idx[j].phys](idx[j].row, idx[j].col) = 1.0;
            VectorXcd v = to_dense(sub);
            if (v.squaredNorm() <= 0.0) continue;
            pairs.emplace_back(i, j);
            cols.push_back(std::move(v));
        }

    out.h2 = MatrixXcd::Zero(pcount, pcount);
    MatrixXcd pair_mat(frame.psi.size(), static_cast<long>(cols.size()));
    for (size_t q = 0; q < cols.size(); ++q) pair_mat.col(static_cast<long>(q)) = cols[q];

    if (!cols.empty()) {
        const VectorXcd t0 = frame.tangents.adjoint() * frame.psi;
        VectorXcd b2(pair_mat.cols());
        for (long q = 0; q < pair_mat.cols(); ++q) {
            const auto [i, j] = pairs[static_cast<size_t>(q)];
            b2(q) = pair_mat.col(q).dot(y) - b1(i) * t0(j) - b1(j) * t0(i);
        }
        const MatrixXcd pair_gram = pair_mat.adjoint() * pair_mat;
        const VectorXcd c2 = gram_pinv_solve(pair_gram, b2, cutoff, &out.pair_rank);
        for (long q = 0; q < c2.size(); ++q) {
            const auto [i, j] = pairs[static_cast<size_t>(q)];
            out.h2(i, j) = out.h2(j, i) = 0.5 * c2(q);
        }
    }

    MatrixXcd full(frame.psi.size(), basis.cols() + pair_mat.cols());
    full.leftCols(basis.cols()) = basis;
    full.rightCols(pair_mat.cols()) = pair_mat;
    out.residual = least_squares_residual(full, hpsi);
    return out;
}

DriftResult tdvp_drift_step(const Mps& psi, const SpinChainHamiltonian& h, double dt,
                            double cutoff) {
    if (!std::isfinite(dt)) throw config_error("tdvp step needs a finite dt");
    if (h.n != psi.n()) throw config_error("hamiltonian and state disagree on the chain length");

    const MatrixXcd hd = assemble_dense_physical(h);
    // Tangent coefficients of -i (H - E)|psi>; scale-invariant in the norm.
    const auto drift = [&](const Mps& s) {
        TangentFrame f = tangent_frame(s, cutoff);
        const VectorXcd hpsi = hd * f.psi;
        const double e = f.psi.dot(hpsi).real() / f.psi.squaredNorm();
        int rank = 0;
        const VectorXcd c =
            gram_pinv_solve(f.gram, f.tangents.adjoint() * (hpsi - e * f.psi), cutoff, &rank);
        return VectorXcd(cxd(0.0, -1.0) * c);
    };

    const double e0 = energy(psi, h);
    const VectorXcd k1 = drift(psi);
    const Mps mid = with_parameters_shifted(psi, (0.5 * dt) * k1);
    const VectorXcd k2 = drift(mid);
    const Mps raw = with_parameters_shifted(psi, dt * k2);

    DriftResult out;
    out.norm_defect = std::abs(mps_norm(raw) - 1.0);
    out.state = normalized(raw);
    out.energy_change = energy(out.state, h) - e0;
    return out;
}

void QuenchConfig::validate(int n) const {
    if (u_width != 1 && u_width != 2) throw config_error("quench unitary must act on 1 or 2 sites");
    if (u.rows() != (1L << u_width) || u.cols() != u.rows())
        throw config_error("quench unitary has the wrong shape");
    if (first_site < 0 || first_site + u_width > n)
        throw config_error("quench unitary falls off the chain");
    if (times.empty()) throw config_error("quench needs at least one report time");
    for (size_t i = 0; i < times.size(); ++i) {
        if (!(times[i] >= 0.0)) throw config_error("quench times must be nonnegative");
        if (i > 0 && times[i] <= times[i - 1])
            throw config_error("quench times must be strictly increasing");
    }
    if (!(dt > 0.0) || !std::isfinite(dt)) throw config_error("quench dt must be positive");
    if (dmax < 1) throw config_error("Dmax must be at least 1");
    if (tol < 0.0) throw config_error("truncation tolerance must be nonnegative");
    if (trotter_order != 1 && trotter_order != 2)
        throw config_error("trotter order must be 1 or 2");
    check_cutoff(cutoff);
    for (const auto& o : observables) {
        if (o.name.empty()) throw config_error("observable needs a name");
        if (o.width != 1 && o.width != 2) throw config_error("observable width must be 1 or 2");
        if (o.width > n) throw config_error("observable wider than the chain");
        if (o.op.rows() != (1L << o.width) || o.op.cols() != o.op.rows())
            throw config_error("observable has the wrong shape");
    }
}

QuenchTrajectory quench_protocol(const MPSEnsemble& ensemble, const SpinChainHamiltonian& h,
                                 const QuenchConfig& cfg) {
    const int n = h.n;
    cfg.validate(n);
    const size_t nterms = ensemble.states.size();
    if (nterms == 0) throw config_error("quench needs a non-empty ensemble");
    for (const Mps& s : ensemble.states)
        if (s.n() != n) throw config_error("ensemble term and hamiltonian disagree on the chain length");

    std::vector<double> w = ensemble.weights;
    if (w.empty()) w.assign(nterms, 1.0);
    if (w.size() != nterms) throw config_error("ensemble weights and states are misaligned");
    double wsum = 0.0;
    for (double x : w) {
        if (!(x >= 0.0)) throw config_error("ensemble weights must be nonnegative");
        wsum += x;
    }
    if (wsum <= 0.0) throw config_error("ensemble weights sum to zero");

    std::vector<NamedObservable> obs = cfg.observables;
    if (obs.empty()) obs.push_back({"Z", pauli_z(), 1});

    size_t slots = 0;
    for (const auto& o : obs) slots += static_cast<size_t>(n - o.width + 1);

    const bool tebd = cfg.method == EvolveMethod::tebd;
    const TrotterGateSet full_step =
        tebd ? trotter_gates(h, cfg.dt, cfg.trotter_order, false) : TrotterGateSet{};

    // Observable table of one term: time-major, then observable, then site.
    const auto run_term = [&](const Mps& start) {
        std::vector<double> vals;
        vals.reserve(cfg.times.size() * slots);
        Mps cur = apply_local_unitary(start, cfg.u, cfg.first_site, cfg.u_width);
        double tcur = 0.0;
        for (double target : cfg.times) {
            const double gap = target - tcur;
            const long steps = static_cast<long>(std::floor(gap / cfg.dt + 1e-9));
            const double rem = gap - static_cast<double>(steps) * cfg.dt;
            if (tebd) {
                if (steps > 0) cur = evolve(cur, full_step, static_cast<int>(steps), cfg.dmax, cfg.tol).state;
                if (rem > 1e-12)
                    cur = evolve(cur, trotter_gates(h, rem, cfg.trotter_order, false), 1, cfg.dmax,
                                 cfg.tol).state;
            } else {
                for (long s = 0; s < steps; ++s) cur = tdvp_drift_step(cur, h, cfg.dt, cfg.cutoff).state;
                if (rem > 1e-12) cur = tdvp_drift_step(cur, h, rem, cfg.cutoff).state;
            }
            tcur = target;
            const double norm2 = overlap(cur, cur).real();
            for (const auto& o : obs)
                for (int site = 0; site + o.width <= n; ++site)
                    vals.push_back(expectation(cur, o.op, site, o.width).real() / norm2);
        }
        return vals;
    };

    std::vector<std::vector<double>> per_term(nterms);
    const int nthreads = std::min<int>(thermix_threads(), static_cast<int>(nterms));
    if (nthreads <= 1) {
        for (size_t t = 0; t < nterms; ++t) per_term[t] = run_term(ensemble.states[t]);
    } else {
        // Terms are independent; a strided split keeps the output order fixed.
        std::vector<std::future<void>> futs;
        futs.reserve(static_cast<size_t>(nthreads));
        for (int c = 0; c < nthreads; ++c)
            futs.push_back(std::async(std::launch::deferred | std::launch::async, [&, c] {
                for (size_t t = static_cast<size_t>(c); t < nterms; t += static_cast<size_t>(nthreads))
                    per_term[t] = run_term(ensemble.states[t]);
            }));
        for (auto& f : futs) f.get();
    }

    QuenchTrajectory out;
    out.method = tebd ? "tebd" : "tdvp";
    out.dmax = cfg.dmax;
    if (!tebd) {
        out.dmax = 0;
        for (const Mps& s : ensemble.states) out.dmax = std::max(out.dmax, s.max_bond());
    }

    for (size_t ti = 0; ti < cfg.times.size(); ++ti) {
        size_t slot = ti * slots;
        for (const auto& o : obs)
            for (int site = 0; site + o.width <= n; ++site, ++slot) {
                double mean = 0.0;
                for (size_t t = 0; t < nterms; ++t) mean += w[t] / wsum * per_term[t][slot];
                double se = 0.0;
                if (nterms > 1) {
                    for (size_t t = 0; t < nterms; ++t) {
                        const double p = w[t] / wsum;
                        const double d = per_term[t][slot] - mean;
                        se += p * p * d * d;
                    }
                    se = std::sqrt(se * static_cast<double>(nterms) /
                                   static_cast<double>(nterms - 1));
                }
                out.rows.push_back({cfg.times[ti], site, o.name, mean, se});
            }
    }
    return out;
}

DiffusionCheck diffusion_matrix_check(const Mps& psi, const SpinChainHamiltonian& h,
                                      double cutoff) {
    const ActionDecomposition dec = decompose_action(psi, h, 2, cutoff);
    const long p = dec.h2.rows();
    const MatrixXcd c = cxd(0.0, -1.0) * dec.h2;

    MatrixXd d(2 * p, 2 * p);
    d.topLeftCorner(p, p) = c.real();
    d.topRightCorner(p, p) = c.imag();
    d.bottomLeftCorner(p, p) = c.imag().transpose();
    d.bottomRightCorner(p, p) = -c.real();
    d *= 0.5;

    Eigen::SelfAdjointEigenSolver<MatrixXd> es(d);
    if (es.info() != Eigen::Success)
        throw numerical_error("diffusion matrix eigendecomposition failed");

    DiffusionCheck out;
    out.eigenvalues = es.eigenvalues();
    out.min_eigenvalue = out.eigenvalues.minCoeff();
    out.max_eigenvalue = out.eigenvalues.maxCoeff();
    out.frobenius = d.norm();
    out.positive_semidefinite = out.min_eigenvalue >= -1e-10;
    return out;
}

}  // namespace thermix
