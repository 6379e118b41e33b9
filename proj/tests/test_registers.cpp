#include <doctest.h>

#include "thermix/pauli.hpp"
#include "thermix/registers.hpp"
#include "thermix/rng.hpp"

#include "test_util.hpp"

using namespace thermix;
using namespace thermix::testutil;

TEST_SUITE_BEGIN("registers");

TEST_CASE("strides and total dimension") {
    const std::vector<int> dims{2, 3, 4};
    CHECK(total_dim(dims) == 24);
    const auto s = register_strides(dims);
    CHECK(s == std::vector<long>{12, 4, 1});
    CHECK_THROWS_AS(total_dim({2, 0}), config_error);
}

TEST_CASE("vector permutation moves factors") {
    RngStream rng(11);
    const VectorXcd a = random_vector(2, rng), b = random_vector(3, rng), c = random_vector(2, rng);
    const VectorXcd v = kron(kron(a, b), c);
    const VectorXcd w = permute_registers(v, {2, 3, 2}, {2, 0, 1});
    CHECK((w - kron(kron(c, a), b)).norm() == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("operator permutation swaps kron order") {
    RngStream rng(12);
    const MatrixXcd a = random_matrix(2, 2, rng), b = random_matrix(3, 3, rng);
    const MatrixXcd m = permute_registers(kron(a, b), {2, 3}, {1, 0});
    CHECK((m - kron(b, a)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("partial trace of product operators") {
    RngStream rng(13);
    const MatrixXcd a = random_matrix(2, 2, rng), b = random_matrix(3, 3, rng),
                    c = random_matrix(2, 2, rng);
    const MatrixXcd m = kron(kron(a, b), c);
    const std::vector<int> dims{2, 3, 2};
    CHECK((partial_trace(m, dims, {0, 2}) - b.trace() * kron(a, c)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((partial_trace(m, dims, {1}) - a.trace() * c.trace() * b).cwiseAbs().maxCoeff() < 1e-12);
    CHECK_THROWS_AS(partial_trace(m, dims, {2, 0}), config_error);
}

TEST_CASE("embedding factorizes over disjoint registers") {
    RngStream rng(14);
    const MatrixXcd a = random_matrix(2, 2, rng), b = random_matrix(2, 2, rng);
    const std::vector<int> dims{2, 2, 2};
    const MatrixXcd joint = embed_operator(kron(a, b), dims, {2, 0});
    const MatrixXcd split = embed_operator(a, dims, {2}) * embed_operator(b, dims, {0});
    CHECK((joint - split).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((embed_operator(pauli_x(), dims, {1}) - kron(kron(MatrixXcd::Identity(2, 2), pauli_x()),
                                                       MatrixXcd::Identity(2, 2)))
              .cwiseAbs()
              .maxCoeff() < 1e-14);
}

TEST_CASE("isometry application at the back") {
    RngStream rng(15);
    VectorXcd v = random_vector(8, rng);
    const std::vector<int> dims{2, 2, 2};

    // A unitary on the middle register equals the embedded operator up to reordering.
    const auto moved = apply_isometry_at_back(v, dims, {1}, pauli_x(), {2});
    const VectorXcd flipped = embed_operator(pauli_x(), dims, {1}) * v;
    const VectorXcd expect = permute_registers(flipped, dims, {0, 2, 1});
    CHECK((moved.vec - expect).norm() < 1e-14);
    CHECK(moved.dims == std::vector<int>{2, 2, 2});

    // A genuine dilation preserves the norm and the reduced state on untouched registers.
    const MatrixXcd iso = random_unitary(4, rng).leftCols(2);
    const auto big = apply_isometry_at_back(v, dims, {2}, iso, {4});
    CHECK(big.dims == std::vector<int>{2, 2, 4});
    CHECK(big.vec.norm() == doctest::Approx(v.norm()).epsilon(1e-13));
    const MatrixXcd before = partial_trace(MatrixXcd(v * v.adjoint()), dims, {0, 1});
    const MatrixXcd after =
        partial_trace(MatrixXcd(big.vec * big.vec.adjoint()), big.dims, {0, 1});
    CHECK((before - after).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("channel application matches embedded Kraus sum") {
    RngStream rng(16);
    const MatrixXcd rho = random_density(8, rng);
    const std::vector<int> dims{2, 2, 2};
    const std::vector<MatrixXcd> kraus{basis_vector_z(0) * basis_vector_z(0).adjoint(),
                                       basis_vector_z(1) * basis_vector_z(1).adjoint()};
    const auto res = apply_channel_at_back(rho, dims, {0}, kraus, {2});
    MatrixXcd expect = MatrixXcd::Zero(8, 8);
    for (const auto& k : kraus) {
        const MatrixXcd lifted = embed_operator(k, dims, {0});
        expect += lifted * rho * lifted.adjoint();
    }
    CHECK((res.rho - permute_registers(expect, dims, {1, 2, 0})).cwiseAbs().maxCoeff() < 1e-13);
    CHECK(res.rho.trace().real() == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_SUITE_END();
