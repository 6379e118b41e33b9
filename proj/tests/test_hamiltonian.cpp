#include <doctest.h>

#include <nlohmann/json.hpp>

#include "thermix/hamiltonian.hpp"
#include "thermix/pauli.hpp"
#include "thermix/registers.hpp"

using namespace thermix;

namespace {

HamiltonianSpec tfim(int n, double J, double g, Boundary b = Boundary::open) {
    HamiltonianSpec s;
    s.preset = "tfim";
    s.n = n;
    s.J = J;
    s.g = g;
    s.boundary = b;
    return s;
}

VectorXd spectrum(const MatrixXcd& h) {
    return Eigen::SelfAdjointEigenSolver<MatrixXcd>(h, Eigen::EigenvaluesOnly).eigenvalues();
}

}  // namespace

TEST_SUITE_BEGIN("hamiltonian");

TEST_CASE("zero couplings contribute no terms") {
    const auto h = build_hamiltonian(tfim(2, 1.0, 0.0));
    CHECK(h.terms.size() == 1);
    CHECK(h.energy_scale == doctest::Approx(1.0));
    const VectorXd ev = spectrum(assemble_dense_physical(h));
    CHECK(ev(0) == doctest::Approx(-1.0));
    CHECK(ev(1) == doctest::Approx(-1.0));
    CHECK(ev(2) == doctest::Approx(1.0));
    CHECK(ev(3) == doctest::Approx(1.0));
}

TEST_CASE("normalization rescales terms but not the physics") {
    const auto h = build_hamiltonian(tfim(3, 2.0, 1.0));
    CHECK(h.energy_scale == doctest::Approx(2.0));
    double max_norm = 0.0;
    for (const auto& t : h.terms) max_norm = std::max(max_norm, operator_inf_norm(t.op));
    CHECK(max_norm == doctest::Approx(1.0).epsilon(1e-12));

    const std::vector<int> dims{2, 2, 2};
    MatrixXcd expect = MatrixXcd::Zero(8, 8);
    const MatrixXcd zz = kron(pauli_z(), pauli_z());
    expect -= 2.0 * embed_operator(zz, dims, {0, 1});
    expect -= 2.0 * embed_operator(zz, dims, {1, 2});
    for (int k = 0; k < 3; ++k) expect -= embed_operator(pauli_x(), dims, {k});
    CHECK((assemble_dense_physical(h) - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("heisenberg spectra match closed forms") {
    HamiltonianSpec s;
    s.preset = "heisenberg";
    s.J = 1.0;

    s.n = 2;  // singlet at -3J, triplet at +J
    const VectorXd ev2 = spectrum(assemble_dense_physical(build_hamiltonian(s)));
    CHECK(ev2(0) == doctest::Approx(-3.0).epsilon(1e-12));
    CHECK(ev2(3) == doctest::Approx(1.0).epsilon(1e-12));

    s.n = 3;  // open chain ground energy -4J
    const auto h3 = build_hamiltonian(s);
    CHECK(h3.energy_scale == doctest::Approx(3.0));
    CHECK(spectrum(assemble_dense_physical(h3))(0) == doctest::Approx(-4.0).epsilon(1e-12));
}

TEST_CASE("periodic boundary adds the wrap bond") {
    const auto h = build_hamiltonian(tfim(3, 1.0, 0.5, Boundary::periodic));
    int bonds = 0;
    for (const auto& t : h.terms) bonds += t.width == 2;
    CHECK(bonds == 3);
    const std::vector<int> dims{2, 2, 2};
    const MatrixXcd zz = kron(pauli_z(), pauli_z());
    MatrixXcd expect = MatrixXcd::Zero(8, 8);
    expect -= embed_operator(zz, dims, {0, 1});
    expect -= embed_operator(zz, dims, {1, 2});
    expect -= embed_operator(zz, dims, {2, 0});
    for (int k = 0; k < 3; ++k) expect -= 0.5 * embed_operator(pauli_x(), dims, {k});
    CHECK((assemble_dense_physical(h) - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("window restriction keeps interior terms") {
    const auto h = build_hamiltonian(tfim(5, 1.0, 0.7));
    const auto w = restrict_to_window(h, 1, 3);
    CHECK(w.n == 3);
    CHECK(w.energy_scale == doctest::Approx(h.energy_scale));
    const auto expect = build_hamiltonian(tfim(3, 1.0, 0.7));
    CHECK((assemble_dense_physical(w) - assemble_dense_physical(expect)).cwiseAbs().maxCoeff() <
          1e-12);
}

TEST_CASE("json round trip and validation") {
    const auto j = nlohmann::json::parse(
        R"({"preset":"tfim","n":8,"J":1.0,"g":1.0,"boundary":"open"})");
    const auto s = HamiltonianSpec::from_json(j);
    const auto s2 = HamiltonianSpec::from_json(s.to_json());
    CHECK((assemble_dense(build_hamiltonian(s)) - assemble_dense(build_hamiltonian(s2)))
              .cwiseAbs()
              .maxCoeff() < 1e-14);

    CHECK_THROWS_AS(HamiltonianSpec::from_json(nlohmann::json::parse(R"({"preset":"xxz","n":4})")),
                    config_error);
    CHECK_THROWS_AS(HamiltonianSpec::from_json(nlohmann::json::parse(R"({"preset":"tfim"})")),
                    config_error);
    CHECK_THROWS_AS(HamiltonianSpec::from_json(
                        nlohmann::json::parse(R"({"preset":"tfim","n":4,"boundary":"moebius"})")),
                    config_error);

    HamiltonianSpec bad;
    bad.preset = "custom";
    bad.n = 2;
    LocalTerm t;
    t.first_site = 0;
    t.width = 1;
    t.op = MatrixXcd(2, 2);
    t.op << 0, 1, 0, 0;  // not Hermitian
    bad.terms.push_back(t);
    CHECK_THROWS_AS(build_hamiltonian(bad), config_error);
}

TEST_CASE("custom terms survive a json round trip") {
    HamiltonianSpec s;
    s.preset = "custom";
    s.n = 3;
    LocalTerm t;
    t.first_site = 1;
    t.width = 2;
    t.op = 0.25 * (kron(pauli_x(), pauli_y()) + kron(pauli_y(), pauli_x()));
    s.terms.push_back(t);
    const auto s2 = HamiltonianSpec::from_json(s.to_json());
    CHECK((assemble_dense_physical(build_hamiltonian(s)) -
           assemble_dense_physical(build_hamiltonian(s2)))
              .cwiseAbs()
              .maxCoeff() < 1e-14);
}

TEST_SUITE_END();
