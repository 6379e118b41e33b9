#include "thermix/mixture.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <utility>

#include "thermix/dense_oracle.hpp"
#include "thermix/recovery.hpp"
#include "thermix/registers.hpp"
#include "thermix/rng.hpp"

namespace thermix {

namespace {

// register labels tracked through the back-application shuffles
constexpr int kRegA = 0, kRegB = 1, kRegC = 2, kRegPurifier = 3, kRegEnv = 4;

int reg_label(int kind, int block) { return kind * 100 + block; }

int position_of(const std::vector<int>& labels, int label) {
    for (int k = 0; k < static_cast<int>(labels.size()); ++k)
        if (labels[k] == label) return k;
    throw std::logic_error("register bookkeeping lost a label");
}

std::vector<int> erase_positions(std::vector<int> v, std::vector<int> pos) {
    std::sort(pos.rbegin(), pos.rend());
    for (int p : pos) v.erase(v.begin() + p);
    return v;
}

std::vector<int> iota_range(int first, int last) {
    std::vector<int> out(last - first);
    std::iota(out.begin(), out.end(), first);
    return out;
}

using RowMajorMap =
    Eigen::Map<const Eigen::Matrix<cxd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

int state_rank(const MatrixXcd& m, double tol) {
    const Eigen::JacobiSVD<MatrixXcd> svd(m);
    int r = 0;
    for (long i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()(i) > tol) ++r;
    return r;
}

MatrixXcd random_matrix(RngStream& rng, long rows, long cols) {
    MatrixXcd m(rows, cols);
    for (long r = 0; r < rows; ++r)
        for (long c = 0; c < cols; ++c) m(r, c) = rng.next_complex_normal();
    return m;
}

MatrixXcd random_unitary(RngStream& rng, long d) {
    const Eigen::HouseholderQR<MatrixXcd> qr(random_matrix(rng, d, d));
    return qr.householderQ() * MatrixXcd::Identity(d, d);
}

}  // namespace

BlockingPlan plan_blocks(int n, int block_sites, int c_width, double eps_reference) {
    if (n < 2 || n > 10) throw config_error("mixture build supports 2 <= n <= 10");
    if (block_sites < 1) throw config_error("blocks need at least one site in A and B");
    if (c_width < 0) throw config_error("c width cannot be negative");
    if (eps_reference <= 0.0) throw config_error("reference accuracy must be positive");
    const int period = 2 * block_sites + c_width;
    if (n % period != 0) throw config_error("blocks do not tile the chain");

    BlockingPlan plan;
    plan.n = n;
    plan.block_sites = block_sites;
    plan.c_width = c_width;
    plan.eps_reference = eps_reference;
    const int count = n / period;
    long bond = 0;
    for (int i = 0; i < count; ++i) {
        Block b;
        b.a_start = i * period;
        b.b_start = b.a_start + block_sites;
        b.c_start = b.b_start + block_sites;
        b.c_end = b.c_start + c_width;
        plan.blocks.push_back(b);
        plan.purifier_dims.push_back(1L << (2 * block_sites));
        // channel i reads B_i and, except at the right edge, A_{i+1}
        const int in_sites = (i + 1 < count) ? 2 * block_sites : block_sites;
        plan.dilation_dims.push_back(1L << (2 * in_sites + c_width));
        const int next_a = (i + 1 < count) ? block_sites : 0;
        const long expo = 2 * block_sites + (next_a + block_sites) +
                          2L * (next_a + block_sites + c_width);
        bond = std::max(bond, 1L << expo);
    }
    const double ln = std::log(static_cast<double>(n) / eps_reference);
    plan.prescribed_block_sites = static_cast<int>(std::ceil(ln * ln));
    plan.bond_bound = bond;
    plan.bond_bound_vacuous = bond >= (1L << (n / 2));
    return plan;
}

double telescoping_bound(const std::vector<double>& block_errors,
                         const std::vector<double>& decoupling_errors) {
    if (decoupling_errors.size() > block_errors.size())
        throw config_error("more seams than blocks");
    double sum = 0.0;
    for (double e : block_errors) {
        if (e < 0.0) throw config_error("errors cannot be negative");
        sum += e;
    }
    for (double d : decoupling_errors) {
        if (d < 0.0) throw config_error("errors cannot be negative");
        sum += d;
    }
    return sum;
}

MixtureBuild build_mixture(const SpinChainHamiltonian& h, double temperature,
                           const BlockingPlan& plan, double drop_tol) {
    if (h.n != plan.n) throw config_error("plan and hamiltonian disagree on the chain length");
    if (plan.blocks.empty()) throw config_error("plan has no blocks");
    if (drop_tol < 0.0) throw config_error("drop tolerance cannot be negative");
    const int n = plan.n;
    const int count = plan.count();
    const auto gibbs = gibbs_state(h, temperature);

    std::vector<MatrixXcd> block_rho(count);
    std::vector<Purification> pur(count);
    for (int i = 0; i < count; ++i) {
        const Block& blk = plan.blocks[i];
        block_rho[i] = partial_trace_sites(gibbs.rho, n, iota_range(blk.a_start, blk.c_start));
        pur[i] = purify(block_rho[i]);
    }

    // the purification vector's system factor is already (A_i, B_i) row-major,
    // so its digits split into two registers without any data movement
    VectorXcd v;
    std::vector<int> dims, labels;
    for (int i = 0; i < count; ++i) {
        v = (i == 0) ? pur[i].psi : kron(v, pur[i].psi);
        dims.push_back(1 << plan.blocks[i].a_width());
        dims.push_back(1 << plan.blocks[i].b_width());
        dims.push_back(pur[i].purifier_dim);
        labels.push_back(reg_label(kRegA, i));
        labels.push_back(reg_label(kRegB, i));
        labels.push_back(reg_label(kRegPurifier, i));
    }

    // recreate each C_i from its flanking buffers through the dilated channel
    std::vector<std::vector<MatrixXcd>> channel(count);
    for (int i = 0; i < count; ++i) {
        const Block& blk = plan.blocks[i];
        if (blk.c_width() == 0) continue;
        const bool last = (i == count - 1);
        const int w_end = last ? blk.c_end : plan.blocks[i + 1].b_start;
        const MatrixXcd rho_w =
            partial_trace_sites(gibbs.rho, n, iota_range(blk.b_start, w_end));
        const int dl = 1 << blk.b_width();
        const int dm = 1 << blk.c_width();
        const int dr = last ? 1 : (1 << plan.blocks[i + 1].a_width());
        channel[i] = petz_kraus_between(rho_w, dl, dm, dr);

        std::vector<int> in_regs{position_of(labels, reg_label(kRegB, i))};
        if (!last) in_regs.push_back(position_of(labels, reg_label(kRegA, i + 1)));
        std::vector<int> out_dims{dl, dm};
        if (!last) out_dims.push_back(dr);
        out_dims.push_back(static_cast<int>(channel[i].size()));
        auto applied =
            apply_isometry_at_back(v, dims, in_regs, stinespring_isometry(channel[i]), out_dims);
        v = std::move(applied.vec);
        dims = std::move(applied.dims);
        labels = erase_positions(std::move(labels), in_regs);
        labels.push_back(reg_label(kRegB, i));
        labels.push_back(reg_label(kRegC, i));
        if (!last) labels.push_back(reg_label(kRegA, i + 1));
        labels.push_back(reg_label(kRegEnv, i));
    }

    // canonical order: physical sites ascending, then purifier/environment
    // registers in block order (most significant first)
    std::vector<int> order;
    for (int i = 0; i < count; ++i) {
        order.push_back(reg_label(kRegA, i));
        order.push_back(reg_label(kRegB, i));
        if (plan.blocks[i].c_width() > 0) order.push_back(reg_label(kRegC, i));
    }
    for (int i = 0; i < count; ++i) {
        order.push_back(reg_label(kRegPurifier, i));
        if (!channel[i].empty()) order.push_back(reg_label(kRegEnv, i));
    }
    std::vector<int> perm(order.size());
    for (int k = 0; k < static_cast<int>(order.size()); ++k)
        perm[k] = position_of(labels, order[k]);
    v = permute_registers(v, dims, perm);

    const long d_phys = 1L << n;
    const long d_anc = v.size() / d_phys;
    const RowMajorMap branches(v.data(), d_phys, d_anc);

    MixtureBuild out;
    MixtureEnsemble& ens = out.ensemble;
    MixtureAudit& audit = out.audit;
    std::vector<long> keep;
    for (long j = 0; j < d_anc; ++j)
        if (branches.col(j).squaredNorm() > drop_tol) keep.push_back(j);
    MatrixXcd kept(d_phys, static_cast<long>(keep.size()));
    for (long t = 0; t < kept.cols(); ++t) {
        kept.col(t) = branches.col(keep[t]);
        const double w = kept.col(t).squaredNorm();
        ens.weights.push_back(w);
        ens.dense.push_back(kept.col(t) / std::sqrt(w));
        ens.terms.push_back(mps_from_dense(ens.dense.back()));
        audit.weight_sum += w;
    }
    audit.terms = static_cast<int>(keep.size());

    const MatrixXcd rho_mix = kept * kept.adjoint();
    audit.trace_distance = trace_distance(rho_mix, gibbs.rho);

    // independent reconstruction: the same channels composed as Kraus sums on
    // the bare block marginals, no purifiers or dilations involved
    MatrixXcd sigma;
    std::vector<int> sdims, slabels;
    for (int i = 0; i < count; ++i) {
        sigma = (i == 0) ? block_rho[i] : kron(sigma, block_rho[i]);
        sdims.push_back(1 << plan.blocks[i].a_width());
        sdims.push_back(1 << plan.blocks[i].b_width());
        slabels.push_back(reg_label(kRegA, i));
        slabels.push_back(reg_label(kRegB, i));
    }
    for (int i = 0; i < count; ++i) {
        if (channel[i].empty()) continue;
        const bool last = (i == count - 1);
        std::vector<int> in_regs{position_of(slabels, reg_label(kRegB, i))};
        if (!last) in_regs.push_back(position_of(slabels, reg_label(kRegA, i + 1)));
        std::vector<int> out_dims{1 << plan.blocks[i].b_width(), 1 << plan.blocks[i].c_width()};
        if (!last) out_dims.push_back(1 << plan.blocks[i + 1].a_width());
        auto applied = apply_channel_at_back(sigma, sdims, in_regs, channel[i], out_dims);
        sigma = std::move(applied.rho);
        sdims = std::move(applied.dims);
        slabels = erase_positions(std::move(slabels), in_regs);
        slabels.push_back(reg_label(kRegB, i));
        slabels.push_back(reg_label(kRegC, i));
        if (!last) slabels.push_back(reg_label(kRegA, i + 1));
    }
    std::vector<int> site_order;
    for (int i = 0; i < count; ++i) {
        site_order.push_back(reg_label(kRegA, i));
        site_order.push_back(reg_label(kRegB, i));
        if (plan.blocks[i].c_width() > 0) site_order.push_back(reg_label(kRegC, i));
    }
    std::vector<int> sperm(site_order.size());
    for (int k = 0; k < static_cast<int>(site_order.size()); ++k)
        sperm[k] = position_of(slabels, site_order[k]);
    sigma = permute_registers(sigma, sdims, sperm);
    audit.reconstruction_defect = trace_norm(rho_mix - sigma);

    // per-block channel error on the true marginal: prefix through B_i plus
    // the next buffers in, prefix plus C_i out
    for (int i = 0; i < count; ++i) {
        if (channel[i].empty()) {
            audit.block_errors.push_back(0.0);
            continue;
        }
        const Block& blk = plan.blocks[i];
        const bool last = (i == count - 1);
        std::vector<int> sites_in = iota_range(0, blk.c_start);
        if (!last) {
            const auto next = iota_range(plan.blocks[i + 1].a_start, plan.blocks[i + 1].c_start);
            sites_in.insert(sites_in.end(), next.begin(), next.end());
        }
        std::vector<int> sites_out = sites_in;
        for (int s = blk.c_start; s < blk.c_end; ++s) sites_out.push_back(s);
        std::sort(sites_out.begin(), sites_out.end());

        const MatrixXcd rho_in = partial_trace_sites(gibbs.rho, n, sites_in);
        std::vector<int> rdims(sites_in.size(), 2);
        std::vector<int> rlabels = sites_in;  // global site ids
        std::vector<int> in_regs;
        for (int s = blk.b_start; s < blk.c_start; ++s)
            in_regs.push_back(position_of(rlabels, s));
        if (!last)
            for (int s = plan.blocks[i + 1].a_start; s < plan.blocks[i + 1].b_start; ++s)
                in_regs.push_back(position_of(rlabels, s));
        std::vector<int> out_labels = iota_range(blk.b_start, blk.c_end);
        if (!last) {
            const auto next_a = iota_range(plan.blocks[i + 1].a_start, plan.blocks[i + 1].b_start);
            out_labels.insert(out_labels.end(), next_a.begin(), next_a.end());
        }
        auto applied = apply_channel_at_back(rho_in, rdims, in_regs, channel[i],
                                             std::vector<int>(out_labels.size(), 2));
        rlabels = erase_positions(std::move(rlabels), in_regs);
        rlabels.insert(rlabels.end(), out_labels.begin(), out_labels.end());
        std::vector<int> rperm(rlabels.size());
        for (int k = 0; k < static_cast<int>(rlabels.size()); ++k)
            rperm[k] = position_of(rlabels, sites_out[k]);
        const MatrixXcd model = permute_registers(applied.rho, applied.dims, rperm);
        audit.block_errors.push_back(
            trace_norm(model - partial_trace_sites(gibbs.rho, n, sites_out)));
    }

    // seam decoupling: the next block's marginal against the accumulated prefix
    for (int i = 0; i + 1 < count; ++i) {
        const auto xs = iota_range(0, plan.blocks[i].c_start);
        const auto ys = iota_range(plan.blocks[i + 1].a_start, plan.blocks[i + 1].c_start);
        std::vector<int> xy = xs;
        xy.insert(xy.end(), ys.begin(), ys.end());
        const MatrixXcd joint = partial_trace_sites(gibbs.rho, n, xy);
        const MatrixXcd prod = kron(partial_trace_sites(gibbs.rho, n, xs),
                                    partial_trace_sites(gibbs.rho, n, ys));
        audit.decoupling_errors.push_back(trace_norm(joint - prod));
    }
    audit.telescoping = telescoping_bound(audit.block_errors, audit.decoupling_errors);

    audit.kraus_ranks.resize(count, 0);
    for (int i = 0; i < count; ++i)
        audit.kraus_ranks[i] = static_cast<int>(channel[i].size());
    audit.ranks = schmidt_rank_audit(ens, plan, audit.kraus_ranks);
    return out;
}

RankAudit schmidt_rank_audit(const MixtureEnsemble& ensemble, const BlockingPlan& plan,
                             const std::vector<int>& kraus_ranks, double tol) {
    if (static_cast<int>(kraus_ranks.size()) != plan.count())
        throw config_error("one kraus rank per block");
    const int n = plan.n;
    RankAudit audit;
    audit.cut_bounds.assign(n > 1 ? n - 1 : 0, 1);
    for (int c = 1; c < n; ++c) {
        // purification rank across the cut: only a block whose A B sites are
        // split contributes (everything else is a product factor there)
        long d = 1;
        for (const Block& b : plan.blocks)
            if (b.a_start < c && c < b.c_start)
                d = std::min(1L << (c - b.a_start), 1L << (b.c_start - c));
        // at most one channel window straddles any cut
        long factor = 1;
        for (int i = 0; i < plan.count(); ++i) {
            if (kraus_ranks[i] <= 0) continue;
            const bool last = (i == plan.count() - 1);
            const int w0 = plan.blocks[i].b_start;
            const int w1 = last ? plan.blocks[i].c_end : plan.blocks[i + 1].b_start;
            if (w0 < c && c < w1) {
                const int in_sites =
                    last ? plan.blocks[i].b_width()
                         : plan.blocks[i].b_width() + plan.blocks[i + 1].a_width();
                factor = (1L << in_sites) * kraus_ranks[i];
            }
        }
        audit.cut_bounds[c - 1] = d * factor;
    }
    for (long bound : audit.cut_bounds) audit.max_bound = std::max(audit.max_bound, bound);

    audit.satisfied = true;
    for (const Mps& term : ensemble.terms) {
        std::vector<int> ranks;
        for (int c = 1; c < n; ++c) {
            const int r = schmidt_spectrum(term, c).rank(tol);
            ranks.push_back(r);
            audit.max_rank = std::max(audit.max_rank, r);
            if (r > audit.cut_bounds[c - 1]) audit.satisfied = false;
        }
        audit.term_ranks.push_back(std::move(ranks));
    }
    return audit;
}

SloccCheck verify_slocc_monotonicity(int trials, std::uint64_t seed) {
    if (trials < 1) throw config_error("need at least one trial");
    RngStream rng(seed);
    SloccCheck check;
    check.trials = trials;
    const double tol = 1e-10;

    for (int t = 0; t < trials; ++t) {
        const int sites = 2 + static_cast<int>(rng.next_below(5));
        const int left = 1 + static_cast<int>(rng.next_below(sites - 1));
        const long dl = 1L << left, dr = 1L << (sites - left);
        MatrixXcd m = random_matrix(rng, dl, dr);
        m /= m.norm();
        const int base = state_rank(m, tol);

        auto branch_rank = [&](const MatrixXcd& b) -> int {
            const double norm = b.norm();
            if (norm * norm <= 1e-12) return 0;  // empty branch, nothing to bound
            const int r = state_rank(b / norm, tol);
            check.max_rank_seen = std::max(check.max_rank_seen, r);
            return r;
        };

        bool ok = true;
        const int flavor = t % 3;
        if (flavor == 0) {
            // unitary branch: the spectrum is untouched
            ok = branch_rank(m * random_unitary(rng, dr).transpose()) == base;
        } else if (flavor == 1) {
            // trace-preserving local instrument: every branch stays within the rank
            const int members = 2 + static_cast<int>(rng.next_below(2));
            std::vector<MatrixXcd> g;
            MatrixXcd s = MatrixXcd::Zero(dr, dr);
            for (int k = 0; k < members; ++k) {
                g.push_back(random_matrix(rng, dr, dr));
                s += g.back().adjoint() * g.back();
            }
            const MatrixXcd fix = herm_inv_sqrt(s);
            for (const MatrixXcd& gk : g)
                if (branch_rank(m * (gk * fix).transpose()) > base) ok = false;
        } else {
            // operator assembled with cut rank s: rank grows by at most s
            const int s = 1 + static_cast<int>(rng.next_below(3));
            MatrixXcd b = MatrixXcd::Zero(dl, dr);
            for (int u = 0; u < s; ++u)
                b += random_matrix(rng, dl, dl) * m * random_matrix(rng, dr, dr).transpose();
            ok = branch_rank(b) <= static_cast<long>(s) * base;
        }
        if (!ok) ++check.failures;
    }
    return check;
}

}  // namespace thermix
