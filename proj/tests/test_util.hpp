#pragma once

#include <Eigen/QR>

#include "thermix/mps.hpp"
#include "thermix/rng.hpp"
#include "thermix/types.hpp"

namespace thermix::testutil {

inline VectorXcd random_vector(long dim, RngStream& rng) {
    VectorXcd v(dim);
    for (long i = 0; i < dim; ++i) v(i) = rng.next_complex_normal();
    return v;
}

inline MatrixXcd random_matrix(long rows, long cols, RngStream& rng) {
    MatrixXcd m(rows, cols);
    for (long j = 0; j < cols; ++j)
        for (long i = 0; i < rows; ++i) m(i, j) = rng.next_complex_normal();
    return m;
}

inline MatrixXcd random_hermitian(long dim, RngStream& rng) {
    const MatrixXcd a = random_matrix(dim, dim, rng);
    return 0.5 * (a + a.adjoint());
}

// Ginibre-induced density matrix, full rank almost surely.
inline MatrixXcd random_density(long dim, RngStream& rng) {
    const MatrixXcd a = random_matrix(dim, dim, rng);
    MatrixXcd rho = a * a.adjoint();
    return rho / rho.trace().real();
}

inline MatrixXcd random_unitary(long dim, RngStream& rng) {
    Eigen::HouseholderQR<MatrixXcd> qr(random_matrix(dim, dim, rng));
    MatrixXcd q = qr.householderQ() * MatrixXcd::Identity(dim, dim);
    const MatrixXcd r = qr.matrixQR();
    for (long i = 0; i < dim; ++i) q.col(i) *= r(i, i) / std::abs(r(i, i));
    return q;
}

inline Mps random_mps(int n, int dmax, RngStream& rng) {
    VectorXcd v = random_vector(1L << n, rng);
    v /= v.norm();
    return truncate(mps_from_dense(v), dmax).state;
}

inline std::string bits_of(long idx, int n) {
    std::string s(n, '0');
    for (int k = 0; k < n; ++k)
        if ((idx >> (n - 1 - k)) & 1) s[k] = '1';
    return s;
}

}  // namespace thermix::testutil
