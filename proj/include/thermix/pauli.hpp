#pragma once

#include "thermix/types.hpp"

namespace thermix {

inline MatrixXcd pauli_i() { return MatrixXcd::Identity(2, 2); }

inline MatrixXcd pauli_x() {
    MatrixXcd m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}

inline MatrixXcd pauli_y() {
    MatrixXcd m(2, 2);
    m << cxd(0, 0), cxd(0, -1), cxd(0, 1), cxd(0, 0);
    return m;
}

inline MatrixXcd pauli_z() {
    MatrixXcd m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

// Measurement basis vectors. Z: {|0>,|1>}; X: {|+>,|->}.
inline VectorXcd basis_vector_z(int outcome) {
    VectorXcd v = VectorXcd::Zero(2);
    v(outcome) = 1.0;
    return v;
}

inline VectorXcd basis_vector_x(int outcome) {
    VectorXcd v(2);
    const double s = 1.0 / std::sqrt(2.0);
    v(0) = s;
    v(1) = outcome == 0 ? s : -s;
    return v;
}

}  // namespace thermix
