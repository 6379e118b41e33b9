#include <doctest.h>

#include <cmath>
#include <vector>

#include "thermix/pauli.hpp"
#include "thermix/registers.hpp"
#include "thermix/tangent.hpp"

#include "test_util.hpp"

using namespace thermix;
using namespace thermix::testutil;

namespace {

SpinChainHamiltonian tfim(int n, double J, double g) {
    HamiltonianSpec s;
    s.preset = "tfim";
    s.n = n;
    s.J = J;
    s.g = g;
    return build_hamiltonian(s);
}

SpinChainHamiltonian constant_hamiltonian(int n, double c) {
    HamiltonianSpec s;
    s.preset = "custom";
    s.n = n;
    LocalTerm t;
    t.first_site = 0;
    t.width = 1;
    t.op = c * MatrixXcd::Identity(2, 2);
    s.terms.push_back(t);
    return build_hamiltonian(s);
}

SpinChainHamiltonian random_nn_hamiltonian(int n, RngStream& rng, bool with_fields = true) {
    HamiltonianSpec s;
    s.preset = "custom";
    s.n = n;
    for (int b = 0; b + 1 < n; ++b) {
        LocalTerm t;
        t.first_site = b;
        t.width = 2;
        t.op = random_hermitian(4, rng);
        s.terms.push_back(t);
    }
    if (with_fields)
        for (int k = 0; k < n; ++k) {
            LocalTerm t;
            t.first_site = k;
            t.width = 1;
            t.op = random_hermitian(2, rng);
            s.terms.push_back(t);
        }
    return build_hamiltonian(s);
}

// Same construction the frozen oracle values below were measured on.
Mps seeded_mps(int n, int dmax, std::uint64_t seed) {
    RngStream rng(seed);
    VectorXcd v = random_vector(1L << n, rng);
    return normalized(mps_from_dense(v, dmax));
}

Mps seeded_product(int n, std::uint64_t seed) {
    RngStream rng(seed);
    std::vector<VectorXcd> vs;
    for (int k = 0; k < n; ++k) {
        VectorXcd v = random_vector(2, rng);
        vs.push_back(v.normalized());
    }
    return product_state(vs);
}

Mps computational_product(const std::vector<int>& bits) {
    std::vector<VectorXcd> vs;
    for (int b : bits) vs.push_back(basis_vector_z(b));
    return product_state(vs);
}

VectorXcd dense_evolved(const SpinChainHamiltonian& h, const VectorXcd& v0, double t) {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(assemble_dense_physical(h));
    return es.eigenvectors() *
           ((es.eigenvalues().array() * cxd(0.0, -t)).exp().matrix().asDiagonal() *
            (es.eigenvectors().adjoint() * v0));
}

}  // namespace

TEST_SUITE("tangent") {

TEST_CASE("single site frame is the computational basis") {
    RngStream rng(3);
    VectorXcd v = random_vector(2, rng);
    Mps psi = product_state({v.normalized()});

    TangentFrame f = tangent_frame(psi);
    REQUIRE(f.param_count() == 2);
    CHECK((f.tangents - MatrixXcd::Identity(2, 2)).norm() == 0.0);
    CHECK((f.gram - MatrixXcd::Identity(2, 2)).norm() < 1e-14);
    CHECK(f.rank == 2);
    CHECK(f.gauge_nullity() == 0);
}

TEST_CASE("scaling directions reproduce the state") {
    RngStream rng(17);
    Mps psi = random_mps(4, 2, rng);
    TangentFrame f = tangent_frame(psi);
    const VectorXcd vals = parameter_vector(psi);

    // The amplitude is linear in each site tensor, so summing a site's own
    // entries against its tangent columns rebuilds the state.
    for (int k = 0; k < psi.n(); ++k) {
        VectorXcd rebuilt = VectorXcd::Zero(f.psi.size());
        for (int i = 0; i < f.param_count(); ++i)
            if (f.params[i].site == k) rebuilt += vals(i) * f.tangents.col(i);
        CHECK((rebuilt - f.psi).norm() < 1e-12);
        CHECK(std::abs(f.psi.dot(rebuilt).real() - f.psi.squaredNorm()) < 1e-12);
    }
}

TEST_CASE("tangent columns match central finite differences") {
    RngStream rng(5);
    Mps psi = random_mps(3, 2, rng);
    TangentFrame f = tangent_frame(psi);
    const double eps = 1e-5;

    for (int i = 0; i < f.param_count(); ++i) {
        VectorXcd shift = VectorXcd::Zero(f.param_count());
        shift(i) = eps;
        const VectorXcd fd = (to_dense(with_parameters_shifted(psi, shift)) -
                              to_dense(with_parameters_shifted(psi, -shift))) /
                             (2.0 * eps);
        const double rel =
            (fd - f.tangents.col(i)).norm() / std::max(1.0, f.tangents.col(i).norm());
        CHECK(rel < 1e-6);
    }
}

TEST_CASE("product state frame counts the gauge directions") {
    Mps psi = seeded_product(4, 7);
    TangentFrame f = tangent_frame(psi);

    REQUIRE(f.param_count() == 8);
    // Single-site variations overlap only along the state itself: rank
    // 2n - (n - 1) = n + 1, measured independently by dense SVD.
    Eigen::JacobiSVD<MatrixXcd> svd(f.tangents);
    int dense_rank = 0;
    for (long i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()(i) > 1e-10 * svd.singularValues()(0)) ++dense_rank;
    CHECK(dense_rank == 5);
    CHECK(f.rank == 5);
    CHECK(f.gauge_nullity() == 3);

    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(f.gram);
    CHECK(es.eigenvalues().minCoeff() > -1e-10 * es.eigenvalues().maxCoeff());
    CHECK((f.gram - f.gram.adjoint()).norm() < 1e-14);
}

TEST_CASE("identity hamiltonian is parallel to the state") {
    auto h = constant_hamiltonian(3, 0.7);
    Mps psi = seeded_mps(3, 2, 13);

    ActionDecomposition dec = decompose_action(psi, h, 2);
    CHECK(dec.energy == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(dec.h1.norm() < 1e-12);
    CHECK(dec.h2.norm() < 1e-12);
    CHECK(dec.residual < 1e-12);
    CHECK(dec.tangent_residual < 1e-12);
}

TEST_CASE("field action on a product state stays in the tangent space") {
    Mps psi = seeded_product(4, 9);
    auto h = tfim(4, 0.0, 1.0);

    ActionDecomposition d1 = decompose_action(psi, h, 1);
    CHECK(d1.tangent_residual < 1e-10 * d1.action_norm);
    CHECK(d1.h2.size() == 0);

    // The pairwise subtractions remove exactly the product-of-singles content,
    // so a field Hamiltonian leaves nothing at the double level.
    ActionDecomposition d2 = decompose_action(psi, h, 2);
    CHECK(d2.h2.cwiseAbs().maxCoeff() < 1e-10);
    CHECK(d2.pair_rank > 0);
}

TEST_CASE("nearest neighbour action closes in the double tangent space") {
    Mps psi = seeded_mps(4, 2, 11);

    for (std::uint64_t seed : {23u, 29u, 41u}) {
        RngStream rng(seed);
        auto h = random_nn_hamiltonian(4, rng);

        const MatrixXcd hd = assemble_dense_physical(h);
        const VectorXcd p = to_dense(psi);
        CHECK(std::abs(p.dot(hd * p).imag()) < 1e-10);

        ActionDecomposition dec = decompose_action(psi, h, 2);
        CHECK(dec.residual <= 1e-8 * dec.action_norm);
        CHECK(dec.tangent_residual > 1e-6);  // order 2 is doing real work here
        // Gauge counting: nullity = sum of squared interior bond dimensions.
        CHECK(dec.metric_rank == 12);
    }
}

TEST_CASE("paper subtraction terms match the explicit two site basis") {
    Mps psi = seeded_product(2, 53);
    RngStream rng(53);
    random_vector(4, rng);  // advance past the state draws
    HamiltonianSpec s;
    s.preset = "custom";
    s.n = 2;
    LocalTerm t;
    t.first_site = 0;
    t.width = 2;
    t.op = random_hermitian(4, rng);
    s.terms.push_back(t);
    auto h = build_hamiltonian(s);

    ActionDecomposition dec = decompose_action(psi, h, 2);
    CHECK(dec.residual < 1e-12);
    // Cross pairs of a two-site product state are the orthonormal basis
    // e_i (x) e_j, so the pair metric is the identity and the coefficients
    // reduce to the bare connected source.
    CHECK(dec.pair_rank == 4);

    TangentFrame f = tangent_frame(psi);
    const MatrixXcd hd = assemble_dense_physical(h);
    const VectorXcd p = to_dense(psi);
    const VectorXcd y = hd * p - p.dot(hd * p).real() * p;
    const VectorXcd b1 = f.tangents.adjoint() * y;
    const VectorXcd t0 = f.tangents.adjoint() * p;
    for (long i = 0; i < 2; ++i)
        for (long j = 2; j < 4; ++j) {
            VectorXcd dd = VectorXcd::Zero(4);
            dd(i * 2 + (j - 2)) = 1.0;
            const cxd want = 0.5 * (dd.dot(y) - b1(i) * t0(j) - b1(j) * t0(i));
            CHECK(std::abs(want - dec.h2(i, j)) < 1e-13);
        }
}

TEST_CASE("identity drift leaves the state untouched") {
    auto h = constant_hamiltonian(3, -1.3);
    Mps psi = seeded_mps(3, 2, 19);

    DriftResult r = tdvp_drift_step(psi, h, 1e-3);
    CHECK((to_dense(r.state) - to_dense(psi)).norm() < 1e-13);
    CHECK(std::abs(r.energy_change) < 1e-12);
    CHECK(r.norm_defect < 1e-12);
}

TEST_CASE("drift is stationary on an eigenstate") {
    auto h = tfim(4, 1.0, 0.0);  // diagonal, so a computational product is exact
    Mps psi = computational_product({0, 1, 0, 1});

    Mps cur = psi;
    for (int s = 0; s < 5; ++s) {
        DriftResult r = tdvp_drift_step(cur, h, 1e-3);
        CHECK(std::abs(r.energy_change) < 1e-10);
        cur = r.state;
    }
    CHECK((to_dense(cur) - to_dense(psi)).norm() < 1e-8);
}

TEST_CASE("midpoint drift conserves energy and norm") {
    auto h = tfim(4, 1.0, 1.0);
    Mps psi = seeded_mps(4, 2, 31);
    const double e0 = energy(psi, h);

    for (int s = 0; s < 100; ++s) {
        DriftResult r = tdvp_drift_step(psi, h, 1e-3);
        CHECK(r.norm_defect < 1e-9);
        psi = r.state;
        CHECK(std::abs(mps_norm(psi) - 1.0) < 1e-12);
        CHECK(std::abs(energy(psi, h) - e0) < 8e-7);
    }

    // Local energy error of the midpoint step is third order in dt.
    Mps fresh = seeded_mps(4, 2, 31);
    const double de_big = std::abs(tdvp_drift_step(fresh, h, 2e-3).energy_change);
    const double de_small = std::abs(tdvp_drift_step(fresh, h, 1e-3).energy_change);
    CHECK(de_big / de_small == doctest::Approx(8.0).epsilon(0.3));
}

TEST_CASE("quench identity unitary reproduces direct evolution") {
    auto h = tfim(3, 1.0, 1.0);
    MPSEnsemble e;
    e.states.push_back(seeded_product(3, 61));
    e.states.push_back(seeded_product(3, 67));
    e.weights = {0.25, 0.75};

    QuenchConfig q;
    q.u = MatrixXcd::Identity(2, 2);
    q.first_site = 0;
    q.times = {0.0, 0.05, 0.1};
    q.dt = 0.01;
    QuenchTrajectory tr = quench_protocol(e, h, q);
    REQUIRE(tr.rows.size() == 9);
    CHECK(tr.method == "tdvp");

    // Manual per-term stepping with the same integrator and the weighted
    // estimator written out long-hand.
    std::vector<Mps> cur = e.states;
    size_t row = 0;
    double tcur = 0.0;
    for (double target : q.times) {
        const long steps = std::lround((target - tcur) / q.dt);
        for (long s = 0; s < steps; ++s)
            for (auto& m : cur) m = tdvp_drift_step(m, h, q.dt).state;
        tcur = target;
        for (int site = 0; site < 3; ++site, ++row) {
            std::vector<double> x;
            for (const auto& m : cur)
                x.push_back(expectation(m, pauli_z(), site, 1).real() / overlap(m, m).real());
            const double mean = 0.25 * x[0] + 0.75 * x[1];
            const double se = std::sqrt(
                2.0 * (0.25 * 0.25 * std::pow(x[0] - mean, 2) +
                       0.75 * 0.75 * std::pow(x[1] - mean, 2)));
            CHECK(tr.rows[row].time == doctest::Approx(target));
            CHECK(tr.rows[row].site == site);
            CHECK(tr.rows[row].observable == "Z");
            CHECK(tr.rows[row].mean == doctest::Approx(mean).epsilon(1e-12));
            CHECK(tr.rows[row].std_error == doctest::Approx(se).epsilon(1e-12));
        }
    }
}

TEST_CASE("quench flip shows in the time zero row") {
    auto h = tfim(3, 1.0, 1.0);
    MPSEnsemble e;
    e.states.push_back(computational_product({0, 0, 0}));
    e.weights = {1.0};

    QuenchConfig q;
    q.u = pauli_x();
    q.first_site = 1;
    q.times = {0.0};
    QuenchTrajectory tr = quench_protocol(e, h, q);
    REQUIRE(tr.rows.size() == 3);
    CHECK(tr.rows[0].mean == doctest::Approx(1.0));
    CHECK(tr.rows[1].mean == doctest::Approx(-1.0));
    CHECK(tr.rows[2].mean == doctest::Approx(1.0));
    CHECK(tr.rows[0].std_error == 0.0);
}

TEST_CASE("quench spreads the flip symmetrically") {
    auto h = tfim(5, 1.0, 1.0);
    MPSEnsemble e;
    e.states.push_back(computational_product({0, 0, 0, 0, 0}));
    e.weights = {1.0};

    QuenchConfig q;
    q.u = pauli_x();
    q.first_site = 2;
    q.times = {0.2, 0.5};
    q.dt = 5e-3;
    QuenchTrajectory tr = quench_protocol(e, h, q);
    REQUIRE(tr.rows.size() == 10);
    for (size_t i = 0; i < tr.rows.size(); ++i) {
        const size_t base = (i / 5) * 5;
        CHECK(std::abs(tr.rows[i].mean - tr.rows[base + 4 - (i - base)].mean) < 1e-10);
    }
    CHECK(tr.rows[2].mean < 0.0);   // flipped site still remembers the flip at t=0.2
    CHECK(tr.rows[0].mean < 1.0);   // and the edges have started to move
}

TEST_CASE("tebd quench tracks the dense propagator") {
    auto h = tfim(5, 1.0, 1.0);
    MPSEnsemble e;
    e.states.push_back(computational_product({0, 0, 0, 0, 0}));
    e.weights = {1.0};

    QuenchConfig q;
    q.u = pauli_x();
    q.first_site = 2;
    q.times = {0.2};
    q.dt = 1e-3;
    q.method = EvolveMethod::tebd;
    q.dmax = 32;
    QuenchTrajectory tr = quench_protocol(e, h, q);
    CHECK(tr.method == "tebd");
    CHECK(tr.dmax == 32);

    const VectorXcd p0 = to_dense(apply_local_unitary(e.states[0], q.u, 2, 1));
    const VectorXcd pt = dense_evolved(h, p0, 0.2);
    std::vector<int> dims(5, 2);
    for (int k = 0; k < 5; ++k) {
        const MatrixXcd zk = embed_operator(pauli_z(), dims, {k});
        const double want = (pt.adjoint() * zk * pt)(0).real();
        CHECK(std::abs(tr.rows[static_cast<size_t>(k)].mean - want) < 1e-6);
    }
}

TEST_CASE("diffusion matrix is traceless with a paired spectrum") {
    auto h = tfim(4, 1.0, 1.0);
    Mps psi = seeded_mps(4, 2, 47);

    DiffusionCheck chk = diffusion_matrix_check(psi, h);
    REQUIRE(chk.eigenvalues.size() == 48);
    CHECK(chk.min_eigenvalue == doctest::Approx(-0.154606).epsilon(1e-3));
    CHECK(chk.max_eigenvalue == doctest::Approx(0.154606).epsilon(1e-3));
    CHECK_FALSE(chk.positive_semidefinite);
    CHECK(std::abs(chk.eigenvalues.sum()) < 1e-10);
    // [[A, B], [B, -A]] pairs every eigenvalue with its negative.
    for (long i = 0; i < chk.eigenvalues.size(); ++i)
        CHECK(std::abs(chk.eigenvalues(i) +
                       chk.eigenvalues(chk.eigenvalues.size() - 1 - i)) < 1e-10);

    DiffusionCheck flat = diffusion_matrix_check(psi, constant_hamiltonian(4, 2.0));
    CHECK(flat.frobenius < 1e-12);
    CHECK(flat.positive_semidefinite);

    DiffusionCheck field = diffusion_matrix_check(seeded_product(4, 9), tfim(4, 0.0, 1.0));
    CHECK(field.frobenius < 1e-9);
    CHECK(field.positive_semidefinite);
}

TEST_CASE("tangent machinery validates its inputs") {
    Mps psi = seeded_mps(3, 2, 71);
    auto h = tfim(3, 1.0, 1.0);

    Mps doubled = psi;
    for (int s = 0; s < 2; ++s) doubled.sites[0].m[s] *= 2.0;
    CHECK_THROWS_AS(decompose_action(doubled, h, 2), config_error);
    CHECK_THROWS_AS(decompose_action(psi, h, 0), config_error);
    CHECK_THROWS_AS(decompose_action(psi, h, 3), config_error);
    CHECK_THROWS_AS(decompose_action(psi, tfim(4, 1.0, 1.0), 2), config_error);
    CHECK_THROWS_AS(tangent_frame(psi, 0.0), config_error);
    CHECK_THROWS_AS(tangent_frame(seeded_mps(3, 2, 71), 1.0), config_error);

    Mps wrapped = psi;
    wrapped.boundary = Boundary::periodic;
    CHECK_THROWS_AS(tangent_frame(wrapped), config_error);

    CHECK_THROWS_AS(with_parameters_shifted(psi, VectorXcd::Zero(3)), config_error);
    CHECK_THROWS_AS(tdvp_drift_step(psi, h, std::nan("")), config_error);

    MPSEnsemble e;
    e.states.push_back(psi);
    e.weights = {1.0};
    QuenchConfig q;
    q.u = pauli_x();
    q.times = {0.1};
    QuenchConfig bad = q;
    bad.times = {};
    CHECK_THROWS_AS(quench_protocol(e, h, bad), config_error);
    bad = q;
    bad.times = {0.2, 0.1};
    CHECK_THROWS_AS(quench_protocol(e, h, bad), config_error);
    bad = q;
    bad.times = {-0.1, 0.2};
    CHECK_THROWS_AS(quench_protocol(e, h, bad), config_error);
    bad = q;
    bad.dt = 0.0;
    CHECK_THROWS_AS(quench_protocol(e, h, bad), config_error);
    bad = q;
    bad.first_site = 3;
    CHECK_THROWS_AS(quench_protocol(e, h, bad), config_error);
    bad = q;
    bad.u = MatrixXcd::Identity(3, 3);
    CHECK_THROWS_AS(quench_protocol(e, h, bad), config_error);

    MPSEnsemble misaligned = e;
    misaligned.weights = {0.5, 0.5};
    CHECK_THROWS_AS(quench_protocol(misaligned, h, q), config_error);
    MPSEnsemble empty;
    CHECK_THROWS_AS(quench_protocol(empty, h, q), config_error);
}

}  // TEST_SUITE
