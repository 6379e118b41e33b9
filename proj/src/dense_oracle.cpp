#include "thermix/dense_oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "thermix/pauli.hpp"
#include "thermix/registers.hpp"

namespace thermix {

std::vector<int> RegionSplit::alpha_sites() const {
    std::vector<int> v;
    for (int k = 0; k < alpha_end; ++k) v.push_back(k);
    return v;
}

std::vector<int> RegionSplit::beta_sites() const {
    std::vector<int> v;
    for (int k = alpha_end; k < beta_end; ++k) v.push_back(k);
    return v;
}

std::vector<int> RegionSplit::gamma_sites() const {
    std::vector<int> v;
    for (int k = beta_end; k < n; ++k) v.push_back(k);
    return v;
}

void RegionSplit::validate(bool allow_empty_edges) const {
    if (n < 1 || alpha_end < 0 || beta_end < alpha_end || beta_end > n)
        throw config_error("malformed region split");
    if (beta_end == alpha_end) throw config_error("beta region must be nonempty");
    if (!allow_empty_edges && (alpha_end == 0 || beta_end == n))
        throw config_error("alpha and gamma regions must be nonempty");
}

namespace {

Eigen::SelfAdjointEigenSolver<MatrixXcd> herm_eig(const MatrixXcd& h) {
    if (h.rows() != h.cols()) throw config_error("matrix must be square");
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(0.5 * (h + h.adjoint()));
    if (es.info() != Eigen::Success) throw numerical_error("Hermitian eigensolver failed");
    return es;
}

}  // namespace

MatrixXcd herm_exp(const MatrixXcd& h, double factor) {
    const auto es = herm_eig(h);
    const VectorXd w = (factor * es.eigenvalues().array()).exp();
    return es.eigenvectors() * w.asDiagonal() * es.eigenvectors().adjoint();
}

MatrixXcd herm_sqrt(const MatrixXcd& h) {
    const auto es = herm_eig(h);
    VectorXd w = es.eigenvalues();
    for (long i = 0; i < w.size(); ++i) w(i) = w(i) > 0.0 ? std::sqrt(w(i)) : 0.0;
    return es.eigenvectors() * w.asDiagonal() * es.eigenvectors().adjoint();
}

MatrixXcd herm_inv_sqrt(const MatrixXcd& h, double clamp) {
    const auto es = herm_eig(h);
    VectorXd w = es.eigenvalues();
    const double cut = clamp * std::max(w.cwiseAbs().maxCoeff(), 0.0);
    for (long i = 0; i < w.size(); ++i) w(i) = w(i) > cut ? 1.0 / std::sqrt(w(i)) : 0.0;
    return es.eigenvectors() * w.asDiagonal() * es.eigenvectors().adjoint();
}

MatrixXcd herm_pinv(const MatrixXcd& h, double clamp) {
    const auto es = herm_eig(h);
    VectorXd w = es.eigenvalues();
    const double cut = clamp * std::max(w.cwiseAbs().maxCoeff(), 0.0);
    for (long i = 0; i < w.size(); ++i) w(i) = std::abs(w(i)) > cut ? 1.0 / w(i) : 0.0;
    return es.eigenvectors() * w.asDiagonal() * es.eigenvectors().adjoint();
}

GibbsResult gibbs_state(const SpinChainHamiltonian& h, double temperature) {
    if (temperature <= 0.0) throw config_error("temperature must be positive");
    if (h.n > 10) throw config_error("dense Gibbs state limited to n <= 10");
    const MatrixXcd hm = assemble_dense_physical(h);
    const auto es = herm_eig(hm);
    const VectorXd& ev = es.eigenvalues();
    const double e0 = ev.minCoeff();
    // Shift by the ground energy before exponentiating so Z never overflows.
    VectorXd w = ((e0 - ev.array()) / temperature).exp();
    const double z_shifted = w.sum();
    w /= z_shifted;

    GibbsResult out;
    out.rho = es.eigenvectors() * w.asDiagonal() * es.eigenvectors().adjoint();
    out.log_z = std::log(z_shifted) - e0 / temperature;
    out.energy = (w.array() * ev.array()).sum();
    out.temperature = temperature;
    return out;
}

double trace_norm(const MatrixXcd& hermitian) {
    return herm_eig(hermitian).eigenvalues().cwiseAbs().sum();
}

double trace_distance(const MatrixXcd& a, const MatrixXcd& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw config_error("trace distance needs equal shapes");
    return trace_norm(a - b);
}

MatrixXcd partial_trace_sites(const MatrixXcd& rho, int n, const std::vector<int>& keep) {
    const std::vector<int> dims(n, 2);
    return partial_trace(rho, dims, keep);
}

double von_neumann_entropy(const MatrixXcd& rho) {
    const auto es = herm_eig(rho);
    double s = 0.0;
    for (long i = 0; i < es.eigenvalues().size(); ++i) {
        const double p = es.eigenvalues()(i);
        if (p > 1e-300) s -= p * std::log(p);
    }
    return s;
}

double mutual_information(const MatrixXcd& rho, int n, const std::vector<int>& region_a) {
    std::vector<int> region_b;
    for (int k = 0; k < n; ++k)
        if (!std::binary_search(region_a.begin(), region_a.end(), k)) region_b.push_back(k);
    if (region_a.empty() || region_b.empty())
        throw config_error("mutual information needs a nontrivial bipartition");
    const double sa = von_neumann_entropy(partial_trace_sites(rho, n, region_a));
    const double sb = von_neumann_entropy(partial_trace_sites(rho, n, region_b));
    const double sab = von_neumann_entropy(rho);
    return sa + sb - sab;
}

double conditional_mutual_information(const MatrixXcd& rho, const RegionSplit& split) {
    split.validate();
    auto merge = [](std::vector<int> a, const std::vector<int>& b) {
        a.insert(a.end(), b.begin(), b.end());
        std::sort(a.begin(), a.end());
        return a;
    };
    const auto a = split.alpha_sites(), b = split.beta_sites(), c = split.gamma_sites();
    const double s_ab = von_neumann_entropy(partial_trace_sites(rho, split.n, merge(a, b)));
    const double s_bc = von_neumann_entropy(partial_trace_sites(rho, split.n, merge(b, c)));
    const double s_b = von_neumann_entropy(partial_trace_sites(rho, split.n, b));
    const double s_abc = von_neumann_entropy(rho);
    return s_ab + s_bc - s_b - s_abc;
}

CorrelationProfile correlation_decay_profile(const MatrixXcd& rho, int n) {
    if (n < 4) throw config_error("correlation profile needs at least 4 sites");
    const std::vector<MatrixXcd> paulis{pauli_x(), pauli_y(), pauli_z()};

    std::vector<std::array<double, 3>> single(n);
    for (int k = 0; k < n; ++k) {
        const MatrixXcd r1 = partial_trace_sites(rho, n, {k});
        for (int p = 0; p < 3; ++p) single[k][p] = (r1 * paulis[p]).trace().real();
    }

    CorrelationProfile out;
    for (int d = 1; d <= n - 1; ++d) {
        double best = 0.0;
        for (int i = 0; i + d < n; ++i) {
            const MatrixXcd r2 = partial_trace_sites(rho, n, {i, i + d});
            for (int p = 0; p < 3; ++p)
                for (int q = 0; q < 3; ++q) {
                    const double joint = (r2 * kron(paulis[p], paulis[q])).trace().real();
                    best = std::max(best, std::abs(joint - single[i][p] * single[i + d][q]));
                }
        }
        out.distances.push_back(d);
        out.max_connected.push_back(best);
    }

    // Least-squares line through (d, log c_d) over points above numerical floor.
    std::vector<double> xs, ys;
    for (size_t i = 0; i < out.distances.size(); ++i)
        if (out.max_connected[i] > 1e-14) {
            xs.push_back(out.distances[i]);
            ys.push_back(std::log(out.max_connected[i]));
        }
    // Uncorrelated (e.g. product or infinite-temperature) states leave nothing
    // to fit; report the zero profile with xi = r_squared = 0 instead of failing.
    if (xs.size() < 3) return out;
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    const double slope = sxy / sxx;
    out.xi = slope < 0.0 ? -1.0 / slope : std::numeric_limits<double>::infinity();
    out.log_amplitude = my - slope * mx;
    out.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return out;
}

Purification purify(const MatrixXcd& rho) {
    const auto es = herm_eig(rho);
    const VectorXd& w = es.eigenvalues();
    const double cut = 1e-14 * std::max(w.maxCoeff(), 0.0);
    std::vector<int> kept;
    for (long i = 0; i < w.size(); ++i)
        if (w(i) > cut) kept.push_back(static_cast<int>(i));
    if (kept.empty()) throw numerical_error("cannot purify a zero matrix");

    Purification out;
    out.system_dim = static_cast<int>(rho.rows());
    out.purifier_dim = static_cast<int>(kept.size());
    out.psi = VectorXcd::Zero(static_cast<long>(out.system_dim) * out.purifier_dim);
    for (size_t k = 0; k < kept.size(); ++k) {
        const double amp = std::sqrt(w(kept[k]));
        for (long s = 0; s < rho.rows(); ++s)
            out.psi(s * out.purifier_dim + static_cast<long>(k)) = amp * es.eigenvectors()(s, kept[k]);
    }
    return out;
}

}  // namespace thermix
