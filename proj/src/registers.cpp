#include "thermix/registers.hpp"

#include <algorithm>
#include <numeric>

namespace thermix {

long total_dim(const std::vector<int>& dims) {
    long d = 1;
    for (int x : dims) {
        if (x <= 0) throw config_error("register dimension must be positive");
        d *= x;
    }
    return d;
}

std::vector<long> register_strides(const std::vector<int>& dims) {
    std::vector<long> s(dims.size(), 1);
    for (int k = static_cast<int>(dims.size()) - 2; k >= 0; --k) s[k] = s[k + 1] * dims[k + 1];
    return s;
}

namespace {

// old_of_new[i] = flat index in the old layout of the basis state with flat
// index i in the permuted layout.
std::vector<long> permutation_map(const std::vector<int>& dims, const std::vector<int>& perm) {
    const auto m = dims.size();
    if (perm.size() != m) throw config_error("permutation size mismatch");
    std::vector<bool> seen(m, false);
    std::vector<int> new_dims(m);
    for (size_t k = 0; k < m; ++k) {
        if (perm[k] < 0 || static_cast<size_t>(perm[k]) >= m || seen[perm[k]])
            throw config_error("invalid register permutation");
        seen[perm[k]] = true;
        new_dims[k] = dims[perm[k]];
    }
    const auto old_str = register_strides(dims);
    const long d = total_dim(dims);
    std::vector<long> map(d);
    std::vector<int> digits(m, 0);
    for (long i = 0; i < d; ++i) {
        long old_idx = 0;
        for (size_t k = 0; k < m; ++k) old_idx += static_cast<long>(digits[k]) * old_str[perm[k]];
        map[i] = old_idx;
        for (int k = static_cast<int>(m) - 1; k >= 0; --k) {
            if (++digits[k] < new_dims[k]) break;
            digits[k] = 0;
        }
    }
    return map;
}

}  // namespace

VectorXcd permute_registers(const VectorXcd& v, const std::vector<int>& dims,
                            const std::vector<int>& perm) {
    if (v.size() != total_dim(dims)) throw config_error("vector/dims size mismatch");
    const auto map = permutation_map(dims, perm);
    VectorXcd out(v.size());
    for (long i = 0; i < v.size(); ++i) out(i) = v(map[i]);
    return out;
}

MatrixXcd permute_registers(const MatrixXcd& m, const std::vector<int>& dims,
                            const std::vector<int>& perm) {
    if (m.rows() != total_dim(dims) || m.cols() != m.rows())
        throw config_error("operator/dims size mismatch");
    const auto map = permutation_map(dims, perm);
    MatrixXcd out(m.rows(), m.cols());
    for (long j = 0; j < m.cols(); ++j)
        for (long i = 0; i < m.rows(); ++i) out(i, j) = m(map[i], map[j]);
    return out;
}

MatrixXcd partial_trace(const MatrixXcd& m, const std::vector<int>& dims,
                        const std::vector<int>& keep) {
    if (m.rows() != total_dim(dims) || m.cols() != m.rows())
        throw config_error("operator/dims size mismatch");
    if (!std::is_sorted(keep.begin(), keep.end()) ||
        std::adjacent_find(keep.begin(), keep.end()) != keep.end())
        throw config_error("keep list must be strictly ascending");
    for (int k : keep)
        if (k < 0 || static_cast<size_t>(k) >= dims.size()) throw config_error("keep index out of range");

    const auto str = register_strides(dims);
    std::vector<int> traced;
    for (size_t k = 0; k < dims.size(); ++k)
        if (!std::binary_search(keep.begin(), keep.end(), static_cast<int>(k)))
            traced.push_back(static_cast<int>(k));

    auto offsets = [&](const std::vector<int>& regs) {
        std::vector<long> off{0};
        for (int r : regs) {
            std::vector<long> next;
            next.reserve(off.size() * dims[r]);
            for (long base : off)
                for (int x = 0; x < dims[r]; ++x) next.push_back(base + x * str[r]);
            off = std::move(next);
        }
        return off;
    };
    const auto keep_off = offsets(keep);
    const auto tr_off = offsets(traced);

    MatrixXcd out = MatrixXcd::Zero(static_cast<long>(keep_off.size()),
                                    static_cast<long>(keep_off.size()));
    for (size_t j = 0; j < keep_off.size(); ++j)
        for (size_t i = 0; i < keep_off.size(); ++i) {
            cxd acc = 0.0;
            for (long t : tr_off) acc += m(keep_off[i] + t, keep_off[j] + t);
            out(static_cast<long>(i), static_cast<long>(j)) = acc;
        }
    return out;
}

MatrixXcd embed_operator(const MatrixXcd& op, const std::vector<int>& dims,
                         const std::vector<int>& regs) {
    const auto str = register_strides(dims);
    long d_sub = 1;
    std::vector<bool> used(dims.size(), false);
    for (int r : regs) {
        if (r < 0 || static_cast<size_t>(r) >= dims.size() || used[r])
            throw config_error("invalid register list");
        used[r] = true;
        d_sub *= dims[r];
    }
    if (op.rows() != d_sub || op.cols() != d_sub)
        throw config_error("operator does not match listed registers");

    std::vector<long> sub_off{0};
    for (int r : regs) {
        std::vector<long> next;
        next.reserve(sub_off.size() * dims[r]);
        for (long base : sub_off)
            for (int x = 0; x < dims[r]; ++x) next.push_back(base + x * str[r]);
        sub_off = std::move(next);
    }
    std::vector<long> rest_off{0};
    for (size_t k = 0; k < dims.size(); ++k) {
        if (used[k]) continue;
        std::vector<long> next;
        next.reserve(rest_off.size() * dims[k]);
        for (long base : rest_off)
            for (int x = 0; x < dims[k]; ++x) next.push_back(base + x * str[k]);
        rest_off = std::move(next);
    }

    const long d = total_dim(dims);
    MatrixXcd out = MatrixXcd::Zero(d, d);
    for (long sj = 0; sj < d_sub; ++sj)
        for (long si = 0; si < d_sub; ++si) {
            const cxd val = op(si, sj);
            if (val == cxd(0.0, 0.0)) continue;
            for (long r : rest_off) out(sub_off[si] + r, sub_off[sj] + r) = val;
        }
    return out;
}

MatrixXcd kron(const MatrixXcd& a, const MatrixXcd& b) {
    MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (long i = 0; i < a.rows(); ++i)
        for (long j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

VectorXcd kron(const VectorXcd& a, const VectorXcd& b) {
    VectorXcd out(a.size() * b.size());
    for (long i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
    return out;
}

namespace {

// Permutation moving in_regs (listed order) to the back; returns the permuted
// object reshaped so the in_regs factor is the trailing (least significant) one.
std::vector<int> to_back_permutation(const std::vector<int>& dims, const std::vector<int>& in_regs) {
    std::vector<bool> used(dims.size(), false);
    for (int r : in_regs) {
        if (r < 0 || static_cast<size_t>(r) >= dims.size() || used[r])
            throw config_error("invalid register list");
        used[r] = true;
    }
    std::vector<int> perm;
    for (size_t k = 0; k < dims.size(); ++k)
        if (!used[k]) perm.push_back(static_cast<int>(k));
    perm.insert(perm.end(), in_regs.begin(), in_regs.end());
    return perm;
}

}  // namespace

BackApplyResult apply_isometry_at_back(const VectorXcd& v, const std::vector<int>& dims,
                                       const std::vector<int>& in_regs, const MatrixXcd& iso,
                                       const std::vector<int>& out_dims) {
    const auto perm = to_back_permutation(dims, in_regs);
    std::vector<int> pdims(dims.size());
    for (size_t k = 0; k < dims.size(); ++k) pdims[k] = dims[perm[k]];
    const VectorXcd pv = permute_registers(v, dims, perm);

    long d_in = 1;
    for (int r : in_regs) d_in *= dims[r];
    const long d_out = total_dim(out_dims);
    if (iso.cols() != d_in || iso.rows() != d_out)
        throw config_error("isometry shape does not match registers");
    const long d_rest = pv.size() / d_in;

    Eigen::Map<const MatrixXcd> m(pv.data(), d_in, d_rest);  // column-major: trailing index is the row
    MatrixXcd res = iso * m;                                 // (d_out x d_rest)

    BackApplyResult out;
    out.vec = VectorXcd(d_rest * d_out);
    Eigen::Map<MatrixXcd>(out.vec.data(), d_out, d_rest) = res;
    out.dims.assign(pdims.begin(), pdims.end() - in_regs.size());
    out.dims.insert(out.dims.end(), out_dims.begin(), out_dims.end());
    return out;
}

BackChannelResult apply_channel_at_back(const MatrixXcd& rho, const std::vector<int>& dims,
                                        const std::vector<int>& in_regs,
                                        const std::vector<MatrixXcd>& kraus,
                                        const std::vector<int>& out_dims) {
    const auto perm = to_back_permutation(dims, in_regs);
    std::vector<int> pdims(dims.size());
    for (size_t k = 0; k < dims.size(); ++k) pdims[k] = dims[perm[k]];
    const MatrixXcd prho = permute_registers(rho, dims, perm);

    long d_in = 1;
    for (int r : in_regs) d_in *= dims[r];
    const long d_out = total_dim(out_dims);
    const long d_rest = prho.rows() / d_in;
    if (kraus.empty()) throw config_error("channel needs at least one Kraus operator");
    for (const auto& k : kraus)
        if (k.cols() != d_in || k.rows() != d_out)
            throw config_error("Kraus operator shape does not match registers");

    const MatrixXcd id = MatrixXcd::Identity(d_rest, d_rest);
    MatrixXcd acc = MatrixXcd::Zero(d_rest * d_out, d_rest * d_out);
    for (const auto& k : kraus) {
        const MatrixXcd lifted = kron(id, k);
        acc.noalias() += lifted * prho * lifted.adjoint();
    }

    BackChannelResult out;
    out.rho = std::move(acc);
    out.dims.assign(pdims.begin(), pdims.end() - in_regs.size());
    out.dims.insert(out.dims.end(), out_dims.begin(), out_dims.end());
    return out;
}

}  // namespace thermix
