#include "thermix/hamiltonian.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "thermix/pauli.hpp"
#include "thermix/registers.hpp"

namespace thermix {

double operator_inf_norm(const MatrixXcd& hermitian) {
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(hermitian, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw numerical_error("eigensolver failed on local term");
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

namespace {

void check_term(const LocalTerm& t, int n, Boundary boundary) {
    if (t.width != 1 && t.width != 2) throw config_error("local terms must act on 1 or 2 sites");
    if (t.first_site < 0 || t.first_site >= n) throw config_error("term site out of range");
    if (t.width == 2 && t.first_site == n - 1 && boundary == Boundary::open)
        throw config_error("wrap bond requires periodic boundary");
    const long d = 1L << t.width;
    if (t.op.rows() != d || t.op.cols() != d) throw config_error("term matrix has wrong shape");
    if ((t.op - t.op.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
        throw config_error("term matrix must be Hermitian");
}

std::vector<LocalTerm> preset_terms(const HamiltonianSpec& s) {
    std::vector<LocalTerm> terms;
    const int n_bonds = s.boundary == Boundary::periodic ? s.n : s.n - 1;
    if (s.preset == "tfim") {
        // H = -J sum Z_k Z_{k+1} - g sum X_k. Zero couplings contribute no terms.
        if (s.J != 0.0) {
            const MatrixXcd zz = -s.J * kron(pauli_z(), pauli_z());
            for (int b = 0; b < n_bonds; ++b) terms.push_back({b, 2, zz});
        }
        if (s.g != 0.0) {
            const MatrixXcd x = -s.g * pauli_x();
            for (int k = 0; k < s.n; ++k) terms.push_back({k, 1, x});
        }
    } else if (s.preset == "heisenberg") {
        // H = J sum (X_k X_{k+1} + Y_k Y_{k+1} + Z_k Z_{k+1}), one term per bond.
        if (s.J != 0.0) {
            const MatrixXcd bond = s.J * (kron(pauli_x(), pauli_x()) + kron(pauli_y(), pauli_y()) +
                                          kron(pauli_z(), pauli_z()));
            for (int b = 0; b < n_bonds; ++b) terms.push_back({b, 2, bond});
        }
    } else if (s.preset == "custom") {
        terms = s.terms;
    } else {
        throw config_error("unknown preset '" + s.preset + "'");
    }
    return terms;
}

}  // namespace

SpinChainHamiltonian build_hamiltonian(const HamiltonianSpec& spec) {
    if (spec.n < 2) throw config_error("chain needs at least 2 sites");
    SpinChainHamiltonian h;
    h.n = spec.n;
    h.boundary = spec.boundary;
    h.preset = spec.preset;
    h.terms = preset_terms(spec);
    for (const auto& t : h.terms) check_term(t, h.n, h.boundary);

    double max_norm = 0.0;
    for (const auto& t : h.terms) max_norm = std::max(max_norm, operator_inf_norm(t.op));
    if (spec.normalize && max_norm > 0.0) {
        for (auto& t : h.terms) t.op /= max_norm;
        h.energy_scale = max_norm;
    } else {
        if (max_norm > 1.0 + 1e-12)
            throw config_error("unnormalized spec has a term with norm > 1");
        h.energy_scale = 1.0;
    }
    std::stable_sort(h.terms.begin(), h.terms.end(), [](const LocalTerm& a, const LocalTerm& b) {
        return a.first_site < b.first_site;
    });
    return h;
}

int SpinChainHamiltonian::max_term_width() const {
    int w = 0;
    for (const auto& t : terms) w = std::max(w, t.width);
    return w;
}

MatrixXcd assemble_dense(const SpinChainHamiltonian& h) {
    if (h.n > 14) throw config_error("dense assembly limited to n <= 14");
    const long d = 1L << h.n;
    const std::vector<int> dims(h.n, 2);
    MatrixXcd out = MatrixXcd::Zero(d, d);
    for (const auto& t : h.terms) {
        std::vector<int> regs{t.first_site};
        if (t.width == 2) regs.push_back((t.first_site + 1) % h.n);
        out += embed_operator(t.op, dims, regs);
    }
    return out;
}

MatrixXcd assemble_dense_physical(const SpinChainHamiltonian& h) {
    return h.energy_scale * assemble_dense(h);
}

SpinChainHamiltonian restrict_to_window(const SpinChainHamiltonian& h, int first, int width) {
    if (first < 0 || width < 1 || first + width > h.n)
        throw config_error("window out of range");
    SpinChainHamiltonian out;
    out.n = width;
    out.boundary = Boundary::open;
    out.energy_scale = h.energy_scale;
    out.preset = h.preset;
    for (const auto& t : h.terms) {
        if (t.width == 2 && t.first_site == h.n - 1) continue;  // wrap bond never fits
        if (t.first_site >= first && t.first_site + t.width <= first + width)
            out.terms.push_back({t.first_site - first, t.width, t.op});
    }
    return out;
}

HamiltonianSpec HamiltonianSpec::from_json(const nlohmann::json& j) {
    HamiltonianSpec s;
    if (!j.is_object()) throw config_error("hamiltonian spec must be a JSON object");
    s.preset = j.value("preset", std::string("tfim"));
    if (s.preset != "tfim" && s.preset != "heisenberg" && s.preset != "custom")
        throw config_error("unknown preset '" + s.preset + "'");
    if (!j.contains("n")) throw config_error("hamiltonian spec needs field 'n'");
    s.n = j.at("n").get<int>();
    s.J = j.value("J", 1.0);
    s.g = j.value("g", 1.0);
    const std::string b = j.value("boundary", std::string("open"));
    if (b == "open")
        s.boundary = Boundary::open;
    else if (b == "periodic")
        s.boundary = Boundary::periodic;
    else
        throw config_error("boundary must be 'open' or 'periodic'");
    s.normalize = j.value("normalize", true);
    if (j.contains("terms")) {
        if (s.preset != "custom") throw config_error("explicit terms require preset 'custom'");
        for (const auto& jt : j.at("terms")) {
            LocalTerm t;
            t.first_site = jt.at("first_site").get<int>();
            t.width = jt.at("width").get<int>();
            const auto& m = jt.at("matrix");
            const long d = 1L << t.width;
            if (static_cast<long>(m.size()) != d * d)
                throw config_error("term matrix has wrong number of entries");
            t.op = MatrixXcd(d, d);
            for (long r = 0; r < d; ++r)
                for (long c = 0; c < d; ++c) {
                    const auto& e = m.at(r * d + c);
                    t.op(r, c) = cxd(e.at(0).get<double>(), e.at(1).get<double>());
                }
            s.terms.push_back(std::move(t));
        }
    } else if (s.preset == "custom") {
        throw config_error("preset 'custom' requires field 'terms'");
    }
    return s;
}

nlohmann::json HamiltonianSpec::to_json() const {
    nlohmann::json j;
    j["preset"] = preset;
    j["n"] = n;
    j["J"] = J;
    j["g"] = g;
    j["boundary"] = boundary == Boundary::open ? "open" : "periodic";
    j["normalize"] = normalize;
    if (preset == "custom") {
        nlohmann::json terms_json = nlohmann::json::array();
        for (const auto& t : terms) {
            nlohmann::json jt;
            jt["first_site"] = t.first_site;
            jt["width"] = t.width;
            nlohmann::json m = nlohmann::json::array();
            for (long r = 0; r < t.op.rows(); ++r)
                for (long c = 0; c < t.op.cols(); ++c)
                    m.push_back({t.op(r, c).real(), t.op(r, c).imag()});
            jt["matrix"] = m;
            terms_json.push_back(jt);
        }
        j["terms"] = terms_json;
    }
    return j;
}

}  // namespace thermix
