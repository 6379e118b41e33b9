#include "thermix/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "thermix/registers.hpp"

namespace thermix {

namespace {

Eigen::SelfAdjointEigenSolver<MatrixXcd> herm_eig(const MatrixXcd& m) {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(0.5 * (m + m.adjoint()));
    if (es.info() != Eigen::Success) throw numerical_error("Hermitian eigensolver failed");
    return es;
}

// e^{-h/T} with its inverse square root, counting eigenvalues lost to the
// clamp (possible only when T is small enough to underflow the spectrum).
struct GibbsFactor {
    MatrixXcd exp;
    MatrixXcd inv_sqrt;
    int clamped = 0;
};

GibbsFactor gibbs_factor(const SpinChainHamiltonian& h, double temperature) {
    const auto es = herm_eig(assemble_dense_physical(h));
    const VectorXd& ev = es.eigenvalues();
    VectorXd w = (-ev.array() / temperature).exp();
    const double cut = 1e-14 * w.maxCoeff();
    VectorXd wi(w.size());
    GibbsFactor out;
    for (long i = 0; i < w.size(); ++i) {
        if (w(i) > cut) {
            wi(i) = 1.0 / std::sqrt(w(i));
        } else {
            wi(i) = 0.0;
            ++out.clamped;
        }
    }
    out.exp = es.eigenvectors() * w.asDiagonal() * es.eigenvectors().adjoint();
    out.inv_sqrt = es.eigenvectors() * wi.asDiagonal() * es.eigenvectors().adjoint();
    return out;
}

double condition_of(const MatrixXcd& p) {
    const VectorXd sq = herm_eig(p.adjoint() * p).eigenvalues();
    const double lo = sq.minCoeff(), hi = sq.maxCoeff();
    if (lo <= 0.0) return std::numeric_limits<double>::infinity();
    return std::sqrt(hi / lo);
}

// Trace-norm defect of e^{-H/T} against P (factors) P^dag, raw and divided
// by the partition function. Takes the eigensolver of the full Hamiltonian.
void fill_defects(const Eigen::SelfAdjointEigenSolver<MatrixXcd>& es, BridgeOperator& b,
                  const MatrixXcd& factors) {
    const VectorXd boltz = (-es.eigenvalues().array() / b.temperature).exp();
    const MatrixXcd target = es.eigenvectors() * boltz.asDiagonal() * es.eigenvectors().adjoint();
    b.defect = trace_norm(target - b.p * factors * b.p.adjoint());
    b.defect_normalized = b.defect / boltz.sum();
}

MatrixXcd factor_product(const SpinChainHamiltonian& h, int cut, double temperature,
                         int* clamped, MatrixXcd* inv_sqrt) {
    const GibbsFactor left = gibbs_factor(restrict_to_window(h, 0, cut), temperature);
    const GibbsFactor right = gibbs_factor(restrict_to_window(h, cut, h.n - cut), temperature);
    if (clamped) *clamped = left.clamped + right.clamped;
    if (inv_sqrt) *inv_sqrt = kron(left.inv_sqrt, right.inv_sqrt);
    return kron(left.exp, right.exp);
}

ExpFit fit_exp_decay(const std::vector<double>& xs_in, const std::vector<double>& errors) {
    std::vector<double> xs, ys;
    for (size_t i = 0; i < errors.size(); ++i)
        if (errors[i] > 1e-15) {
            xs.push_back(xs_in[i]);
            ys.push_back(std::log(errors[i]));
        }
    ExpFit f;
    f.points = static_cast<int>(xs.size());
    if (f.points < 2) {
        f.log_amplitude = std::numeric_limits<double>::quiet_NaN();
        f.r_squared = std::numeric_limits<double>::quiet_NaN();
        return f;
    }
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
    f.rate = -slope;
    f.log_amplitude = my - slope * mx;
    f.r_squared = sxx > 0.0 && syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return f;
}

}  // namespace

BridgeOperator bridge_operator(const SpinChainHamiltonian& h, const RegionSplit& split,
                               double temperature) {
    split.validate();
    if (split.n != h.n) throw config_error("region split does not match the chain length");
    if (h.n > 10) throw config_error("dense bridge operator limited to n <= 10");
    if (temperature <= 0.0) throw config_error("temperature must be positive");

    BridgeOperator out;
    out.split = split;
    out.temperature = temperature;
    const int nb = split.beta_end - split.alpha_end;
    out.cut = split.alpha_end + (nb + 1) / 2;
    out.window = h.n;
    out.window_start = 0;

    MatrixXcd factors_inv_sqrt;
    const MatrixXcd factors =
        factor_product(h, out.cut, temperature, &out.clamped_eigenvalues, &factors_inv_sqrt);

    const auto es = herm_eig(assemble_dense_physical(h));
    const VectorXd half = (-es.eigenvalues().array() / (2.0 * temperature)).exp();
    const MatrixXcd exp_half = es.eigenvectors() * half.asDiagonal() * es.eigenvectors().adjoint();

    out.p = exp_half * factors_inv_sqrt;
    out.condition_number = condition_of(out.p);
    fill_defects(es, out, factors);
    return out;
}

BridgeOperator truncate_bridge(const SpinChainHamiltonian& h, const BridgeOperator& bridge,
                               int window) {
    if (h.n != bridge.split.n) throw config_error("hamiltonian does not match the bridge");
    if (window < 2 || window % 2 != 0) throw config_error("window width must be even and positive");
    const int start = bridge.cut - window / 2;
    if (start < 0 || start + window > h.n) throw config_error("window exceeds chain");

    BridgeOperator out;
    out.split = bridge.split;
    out.cut = bridge.cut;
    out.temperature = bridge.temperature;
    out.window = window;
    out.window_start = start;

    std::vector<int> keep(window);
    std::iota(keep.begin(), keep.end(), start);
    const std::vector<int> dims(h.n, 2);
    const double outside = static_cast<double>(1L << (h.n - window));
    const MatrixXcd small = partial_trace(bridge.p, dims, keep) / outside;
    out.p = embed_operator(small, dims, keep);

    out.clamped_eigenvalues = bridge.clamped_eigenvalues;
    out.condition_number = condition_of(small);
    const MatrixXcd factors = factor_product(h, out.cut, out.temperature, nullptr, nullptr);
    fill_defects(herm_eig(assemble_dense_physical(h)), out, factors);
    return out;
}

MatrixXcd apply_recovery(const RecoveryChannel& ch, const MatrixXcd& x) {
    if (x.rows() != ch.d_in || x.cols() != ch.d_in)
        throw config_error("channel input has the wrong dimension");
    MatrixXcd out = MatrixXcd::Zero(ch.d_out, ch.d_out);
    for (const auto& k : ch.kraus) out += k * x * k.adjoint();
    if (ch.has_completion()) out += (ch.completion_pick * x).trace() * ch.completion_state;
    return out;
}

double trace_preservation_defect(const RecoveryChannel& ch) {
    MatrixXcd sum = MatrixXcd::Zero(ch.d_in, ch.d_in);
    for (const auto& k : ch.kraus) sum += k.adjoint() * k;
    if (ch.has_completion()) sum += ch.completion_pick;
    return operator_inf_norm(sum - MatrixXcd::Identity(ch.d_in, ch.d_in));
}

MatrixXcd choi_matrix(const RecoveryChannel& ch) {
    const long d = static_cast<long>(ch.d_in) * ch.d_out;
    MatrixXcd choi = MatrixXcd::Zero(d, d);
    for (const auto& k : ch.kraus) {
        const Eigen::Map<const VectorXcd> v(k.data(), k.size());
        choi += v * v.adjoint();
    }
    if (ch.has_completion()) choi += kron(ch.completion_pick.conjugate(), ch.completion_state);
    return choi;
}

std::vector<MatrixXcd> canonical_kraus(const std::vector<MatrixXcd>& kraus, double clamp) {
    if (kraus.empty()) throw config_error("empty Kraus set");
    const long m = static_cast<long>(kraus.size());
    MatrixXcd gram(m, m);
    for (long i = 0; i < m; ++i)
        for (long j = i; j < m; ++j) {
            const cxd g = kraus[i].conjugate().cwiseProduct(kraus[j]).sum();
            gram(i, j) = g;
            gram(j, i) = std::conj(g);
        }
    const auto es = herm_eig(gram);
    const double top = es.eigenvalues().maxCoeff();
    if (top <= 0.0) throw numerical_error("Kraus set has no weight");

    std::vector<MatrixXcd> out;
    for (long j = m - 1; j >= 0; --j) {
        if (es.eigenvalues()(j) <= clamp * top) break;
        MatrixXcd b = MatrixXcd::Zero(kraus[0].rows(), kraus[0].cols());
        for (long k = 0; k < m; ++k) b += es.eigenvectors()(k, j) * kraus[k];
        out.push_back(std::move(b));
    }
    return out;
}

RecoveryChannel petz_recovery_from_state(const MatrixXcd& rho, const RegionSplit& split,
                                         double clamp) {
    split.validate(true);
    if (rho.rows() != (1L << split.n) || rho.cols() != rho.rows())
        throw config_error("state dimension does not match the split");

    std::vector<int> bg = split.beta_sites();
    const auto gamma = split.gamma_sites();
    bg.insert(bg.end(), gamma.begin(), gamma.end());

    const MatrixXcd rho_bg = partial_trace_sites(rho, split.n, bg);
    const MatrixXcd rho_b = partial_trace_sites(rho, split.n, split.beta_sites());

    const auto es_b = herm_eig(rho_b);
    const VectorXd& wb = es_b.eigenvalues();
    if (wb.minCoeff() <= clamp * wb.maxCoeff())
        throw numerical_error("rho_beta is rank deficient beyond the clamp tolerance");
    const VectorXd wi = wb.array().rsqrt().matrix();
    const MatrixXcd inv_sqrt_b = es_b.eigenvectors() * wi.asDiagonal() * es_b.eigenvectors().adjoint();
    const MatrixXcd sqrt_bg = herm_sqrt(rho_bg);

    const long dg = 1L << (split.n - split.beta_end);
    std::vector<MatrixXcd> raw;
    raw.reserve(dg);
    for (long g = 0; g < dg; ++g) {
        MatrixXcd unit = MatrixXcd::Zero(dg, 1);
        unit(g, 0) = 1.0;
        raw.push_back(sqrt_bg * kron(inv_sqrt_b, unit));
    }

    RecoveryChannel ch;
    ch.kraus = canonical_kraus(raw, clamp);
    ch.flavor = RecoveryFlavor::petz;
    ch.split = split;
    ch.d_in = static_cast<int>(rho_b.rows());
    ch.d_out = static_cast<int>(rho_bg.rows());
    return ch;
}

std::vector<MatrixXcd> petz_kraus_between(const MatrixXcd& rho_window, int d_left, int d_mid,
                                          int d_right, double clamp) {
    if (d_left < 1 || d_mid < 1 || d_right < 1) throw config_error("window factors must be positive");
    const long dw = static_cast<long>(d_left) * d_mid * d_right;
    if (rho_window.rows() != dw || rho_window.cols() != dw)
        throw config_error("window state does not match the factor dimensions");

    const MatrixXcd rho_b = partial_trace(rho_window, {d_left, d_mid, d_right}, {0, 2});
    const auto es_b = herm_eig(rho_b);
    const VectorXd& wb = es_b.eigenvalues();
    if (wb.minCoeff() <= clamp * wb.maxCoeff())
        throw numerical_error("buffer marginal is rank deficient beyond the clamp tolerance");
    const VectorXd wi = wb.array().rsqrt().matrix();
    const MatrixXcd inv_sqrt_b = es_b.eigenvectors() * wi.asDiagonal() * es_b.eigenvectors().adjoint();
    const MatrixXcd sqrt_w = herm_sqrt(rho_window);

    const MatrixXcd eye_l = MatrixXcd::Identity(d_left, d_left);
    const MatrixXcd eye_r = MatrixXcd::Identity(d_right, d_right);
    std::vector<MatrixXcd> raw;
    raw.reserve(d_mid);
    for (int m = 0; m < d_mid; ++m) {
        MatrixXcd unit = MatrixXcd::Zero(d_mid, 1);
        unit(m, 0) = 1.0;
        // inserts |m> into the mid slot: rows (l, m, r), columns (l, r)
        raw.push_back(sqrt_w * kron(eye_l, kron(unit, eye_r)) * inv_sqrt_b);
    }
    return canonical_kraus(raw, clamp);
}

RecoveryChannel petz_recovery(const SpinChainHamiltonian& h, const RegionSplit& split,
                              double temperature, double clamp) {
    if (split.n != h.n) throw config_error("region split does not match the chain length");
    RecoveryChannel ch = petz_recovery_from_state(gibbs_state(h, temperature).rho, split, clamp);
    ch.temperature = temperature;
    return ch;
}

RecoveryChannel k_map(const BridgeOperator& bridge, const SpinChainHamiltonian& h,
                      double temperature) {
    const RegionSplit& split = bridge.split;
    split.validate();
    if (h.n != split.n) throw config_error("hamiltonian does not match the bridge");
    if (temperature <= 0.0) throw config_error("temperature must be positive");

    const int nbl = bridge.cut - split.alpha_end;
    const int nbr = split.beta_end - bridge.cut;
    const int ng = split.n - split.beta_end;
    const int nb = nbl + nbr;
    const long dbl_ = 1L << nbl, dbr = 1L << nbr, db = 1L << nb;
    const long dout = db << ng;

    // The bridge lives on the whole chain; the map needs it supported inside
    // beta, so average it down to the largest even window around the cut.
    int w = 2 * std::min(nbl, nbr);
    w = std::min(w, bridge.window - bridge.window % 2);
    MatrixXcd pw;
    std::vector<int> wregs;
    if (w == 0) {
        pw = MatrixXcd::Constant(1, 1, bridge.p.trace() / static_cast<double>(1L << h.n));
    } else {
        std::vector<int> keep(w);
        std::iota(keep.begin(), keep.end(), bridge.cut - w / 2);
        const std::vector<int> dims(h.n, 2);
        pw = partial_trace(bridge.p, dims, keep) / static_cast<double>(1L << (h.n - w));
        for (int s : keep) wregs.push_back(s - split.alpha_end);
    }
    Eigen::FullPivLU<MatrixXcd> lu(pw);
    if (!lu.isInvertible())
        throw numerical_error("bridge window operator is numerically singular");
    const MatrixXcd pw_inv = lu.inverse();

    MatrixXcd pbeta_inv, g_op;
    if (w == 0) {
        pbeta_inv = pw_inv(0, 0) * MatrixXcd::Identity(db, db);
        g_op = pw(0, 0) * MatrixXcd::Identity(dout, dout);
    } else {
        pbeta_inv = embed_operator(pw_inv, std::vector<int>(nb, 2), wregs);
        g_op = embed_operator(pw, std::vector<int>(nb + ng, 2), wregs);
    }

    // beta_R-outcome slices of P^{-1} on beta
    std::vector<MatrixXcd> slices;
    slices.reserve(dbr);
    for (long m = 0; m < dbr; ++m) {
        MatrixXcd am(dbl_, db);
        for (long a = 0; a < dbl_; ++a) am.row(a) = pbeta_inv.row(a * dbr + m);
        slices.push_back(std::move(am));
    }

    const MatrixXcd rho_rg = gibbs_state(restrict_to_window(h, bridge.cut, h.n - bridge.cut),
                                         temperature).rho;
    const auto es_rg = herm_eig(rho_rg);
    const double mu_max = es_rg.eigenvalues().maxCoeff();

    std::vector<MatrixXcd> kraus;
    const MatrixXcd eye_bl = MatrixXcd::Identity(dbl_, dbl_);
    for (long j = 0; j < es_rg.eigenvalues().size(); ++j) {
        const double mu = es_rg.eigenvalues()(j);
        if (mu <= 1e-14 * mu_max) continue;
        const MatrixXcd lift = g_op * kron(eye_bl, MatrixXcd(es_rg.eigenvectors().col(j)));
        for (const auto& am : slices) kraus.push_back(std::sqrt(mu) * lift * am);
    }

    MatrixXcd ksum = MatrixXcd::Zero(db, db);
    for (const auto& k : kraus) ksum += k.adjoint() * k;
    const auto es_sum = herm_eig(ksum);
    const double lam = es_sum.eigenvalues().maxCoeff();
    if (!(lam > 0.0)) throw numerical_error("k-map has vanishing success weight");
    const double scale = 1.0 / std::sqrt(lam * (1.0 + 1e-12));
    for (auto& k : kraus) k *= scale;

    // failure weight, floored at zero so the completion branch stays PSD
    const auto es_fail = herm_eig(MatrixXcd::Identity(db, db) - scale * scale * ksum);
    const VectorXd wf = es_fail.eigenvalues().cwiseMax(0.0);
    const MatrixXcd pick = es_fail.eigenvectors() * wf.asDiagonal() * es_fail.eigenvectors().adjoint();

    std::vector<int> bg = split.beta_sites();
    const auto gamma = split.gamma_sites();
    bg.insert(bg.end(), gamma.begin(), gamma.end());

    RecoveryChannel ch;
    ch.kraus = std::move(kraus);
    ch.flavor = RecoveryFlavor::kmap_completed;
    ch.split = split;
    ch.temperature = temperature;
    ch.d_in = static_cast<int>(db);
    ch.d_out = static_cast<int>(dout);
    ch.completion_pick = pick;
    ch.completion_state = partial_trace_sites(gibbs_state(h, temperature).rho, h.n, bg);
    return ch;
}

std::vector<MatrixXcd> completion_kraus(const RecoveryChannel& ch) {
    std::vector<MatrixXcd> out;
    if (!ch.has_completion()) return out;
    const auto es_pick = herm_eig(ch.completion_pick);
    const auto es_state = herm_eig(ch.completion_state);
    const double pmax = es_pick.eigenvalues().maxCoeff();
    const double smax = es_state.eigenvalues().maxCoeff();
    for (long j = 0; j < es_state.eigenvalues().size(); ++j) {
        const double nu = es_state.eigenvalues()(j);
        if (nu <= 1e-14 * smax) continue;
        for (long k = 0; k < es_pick.eigenvalues().size(); ++k) {
            const double eta = es_pick.eigenvalues()(k);
            if (eta <= 1e-14 * pmax) continue;
            out.push_back(std::sqrt(nu * eta) * es_state.eigenvectors().col(j) *
                          es_pick.eigenvectors().col(k).adjoint());
        }
    }
    return out;
}

namespace {

// (id_alpha (x) channel)(rho_alphabeta); with_completion toggles the
// trace-restoring branch.
MatrixXcd recover_lifted(const MatrixXcd& rho, const RecoveryChannel& ch, const RegionSplit& split,
                         bool with_completion) {
    split.validate(true);
    if (rho.rows() != (1L << split.n) || rho.cols() != rho.rows())
        throw config_error("state dimension does not match the split");
    if (ch.d_in != 1L << (split.beta_end - split.alpha_end) ||
        ch.d_out != 1L << (split.n - split.alpha_end))
        throw config_error("channel dimensions do not match the split");

    const int da = 1 << split.alpha_end;
    std::vector<int> ab(split.beta_end);
    std::iota(ab.begin(), ab.end(), 0);
    const MatrixXcd rho_ab = partial_trace_sites(rho, split.n, ab);

    const std::vector<int> dims{da, ch.d_in};
    MatrixXcd rec = apply_channel_at_back(rho_ab, dims, {1}, ch.kraus, {ch.d_out}).rho;
    if (with_completion && ch.has_completion()) {
        const MatrixXcd weights = kron(MatrixXcd::Identity(da, da), ch.completion_pick);
        const MatrixXcd m = partial_trace(weights * rho_ab, dims, {0});
        rec += kron(m, ch.completion_state);
    }
    return rec;
}

}  // namespace

double recovery_error(const MatrixXcd& rho, const RecoveryChannel& ch, const RegionSplit& split) {
    return trace_distance(rho, recover_lifted(rho, ch, split, true));
}

double recovery_error_conditional(const MatrixXcd& rho, const RecoveryChannel& ch,
                                  const RegionSplit& split) {
    MatrixXcd rec = recover_lifted(rho, ch, split, false);
    const double weight = rec.trace().real();
    if (weight <= 1e-12) throw numerical_error("success branch has vanishing weight");
    return trace_distance(rho, rec / weight);
}

RecoveryProfile recovery_profile(const SpinChainHamiltonian& h, double temperature,
                                 const std::vector<int>& buffer_sizes, bool with_kmap) {
    if (buffer_sizes.size() < 3) throw config_error("recovery profile needs at least 3 buffer sizes");
    const GibbsResult gibbs = gibbs_state(h, temperature);

    RecoveryProfile out;
    for (int size : buffer_sizes) {
        if (size < 1 || size > h.n - 2)
            throw config_error("buffer size must leave room for alpha and gamma");
        const int a = (h.n - size) / 2;
        const RegionSplit split{a, a + size, h.n};

        RecoveryChannel petz = petz_recovery_from_state(gibbs.rho, split);
        petz.temperature = temperature;
        out.buffer_sizes.push_back(size);
        out.petz_errors.push_back(recovery_error(gibbs.rho, petz, split));
        out.cmis.push_back(conditional_mutual_information(gibbs.rho, split));

        if (with_kmap) {
            const BridgeOperator bridge = bridge_operator(h, split, temperature);
            out.bridge_defects.push_back(bridge.defect_normalized);
            out.kmap_errors.push_back(
                recovery_error_conditional(gibbs.rho, k_map(bridge, h, temperature), split));
        }
    }

    // fits and the monotonicity check run in buffer-size order
    std::vector<size_t> order(out.buffer_sizes.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](size_t i, size_t j) { return out.buffer_sizes[i] < out.buffer_sizes[j]; });
    std::vector<double> xs_lin, xs_sqrt, errs;
    for (size_t i : order) {
        xs_lin.push_back(out.buffer_sizes[i]);
        xs_sqrt.push_back(std::sqrt(static_cast<double>(out.buffer_sizes[i])));
        errs.push_back(out.petz_errors[i]);
    }
    out.fit_linear = fit_exp_decay(xs_lin, errs);
    out.fit_sqrt = fit_exp_decay(xs_sqrt, errs);
    out.monotone_nonincreasing = true;
    for (size_t i = 1; i < errs.size(); ++i)
        if (errs[i] > errs[i - 1] + 1e-10) out.monotone_nonincreasing = false;
    return out;
}

StinespringResult stinespring(const RecoveryChannel& ch) {
    std::vector<MatrixXcd> all = ch.kraus;
    if (ch.has_completion()) {
        auto extra = completion_kraus(ch);
        all.insert(all.end(), std::make_move_iterator(extra.begin()),
                   std::make_move_iterator(extra.end()));
    }
    const auto canon = canonical_kraus(all);
    const int r = static_cast<int>(canon.size());

    StinespringResult out;
    out.env_dim = r;
    out.d_in = ch.d_in;
    out.d_out = ch.d_out;
    out.v = stinespring_isometry(canon);
    return out;
}

MatrixXcd stinespring_isometry(const std::vector<MatrixXcd>& kraus) {
    if (kraus.empty()) throw config_error("stinespring needs at least one kraus operator");
    const long r = static_cast<long>(kraus.size());
    const long d_out = kraus.front().rows(), d_in = kraus.front().cols();
    MatrixXcd v = MatrixXcd::Zero(d_out * r, d_in);
    for (long j = 0; j < r; ++j) {
        if (kraus[j].rows() != d_out || kraus[j].cols() != d_in)
            throw config_error("kraus operators disagree on their shape");
        for (long o = 0; o < d_out; ++o) v.row(o * r + j) = kraus[j].row(o);
    }
    return v;
}

}  // namespace thermix
