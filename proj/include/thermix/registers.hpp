#pragma once

#include <vector>

#include "thermix/types.hpp"

// Index arithmetic for states and operators living on an ordered list of
// finite-dimensional registers. Register 0 is the most significant factor:
// for dims (d_0,...,d_{m-1}) the flat index of (x_0,...,x_{m-1}) is
// x_0*d_1*...*d_{m-1} + ... + x_{m-1}.

namespace thermix {

long total_dim(const std::vector<int>& dims);
std::vector<long> register_strides(const std::vector<int>& dims);

// perm[k] = old position of the register that ends up in slot k.
VectorXcd permute_registers(const VectorXcd& v, const std::vector<int>& dims,
                            const std::vector<int>& perm);
MatrixXcd permute_registers(const MatrixXcd& m, const std::vector<int>& dims,
                            const std::vector<int>& perm);

// Trace out every register not listed in `keep`. `keep` must be strictly
// ascending; the output registers follow that order.
MatrixXcd partial_trace(const MatrixXcd& m, const std::vector<int>& dims,
                        const std::vector<int>& keep);

// op acts on the listed registers (row/column factors in the listed order),
// identity on the rest. regs need not be contiguous or sorted.
MatrixXcd embed_operator(const MatrixXcd& op, const std::vector<int>& dims,
                         const std::vector<int>& regs);

MatrixXcd kron(const MatrixXcd& a, const MatrixXcd& b);
VectorXcd kron(const VectorXcd& a, const VectorXcd& b);

// Moves `in_regs` to the back of the register list (in their listed order) and
// applies V there: out = (I ⊗ V) in. V maps the in_regs factor to fresh
// registers of dims `out_dims`, which end up at the back of `dims`.
struct BackApplyResult {
    VectorXcd vec;
    std::vector<int> dims;
};
BackApplyResult apply_isometry_at_back(const VectorXcd& v, const std::vector<int>& dims,
                                       const std::vector<int>& in_regs, const MatrixXcd& iso,
                                       const std::vector<int>& out_dims);

// Same register convention for a channel sum_k K rho K^† given by Kraus
// operators mapping the in_regs factor to `out_dims` registers at the back.
struct BackChannelResult {
    MatrixXcd rho;
    std::vector<int> dims;
};
BackChannelResult apply_channel_at_back(const MatrixXcd& rho, const std::vector<int>& dims,
                                        const std::vector<int>& in_regs,
                                        const std::vector<MatrixXcd>& kraus,
                                        const std::vector<int>& out_dims);

}  // namespace thermix
