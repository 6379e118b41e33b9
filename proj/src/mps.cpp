#include "thermix/mps.hpp"

#include <cmath>
#include <fstream>
#include <functional>

#include <nlohmann/json.hpp>

#include <Eigen/QR>
#include <Eigen/SVD>

namespace thermix {

namespace {

void require_open(const Mps& psi, const char* what) {
    if (psi.boundary != Boundary::open)
        throw config_error(std::string(what) + " supports open boundary only");
}

struct ThinSvd {
    MatrixXcd u;
    VectorXd s;
    MatrixXcd v;  // m = u * s.asDiagonal() * v.adjoint()
};

ThinSvd svd_thin(const MatrixXcd& m, bool vectors = true) {
    const unsigned opts = vectors ? (Eigen::ComputeThinU | Eigen::ComputeThinV) : 0u;
    ThinSvd out;
    if (m.rows() <= 16 && m.cols() <= 16) {
        Eigen::JacobiSVD<MatrixXcd> svd(m, opts);
        out.s = svd.singularValues();
        if (vectors) {
            out.u = svd.matrixU();
            out.v = svd.matrixV();
        }
    } else {
        Eigen::BDCSVD<MatrixXcd> svd(m, opts);
        out.s = svd.singularValues();
        if (vectors) {
            out.u = svd.matrixU();
            out.v = svd.matrixV();
        }
    }
    return out;
}

// Singular values are selected on the normalized spectrum; at least one is kept.
long pick_rank(const VectorXd& s, int dmax, double tol) {
    const double total = s.norm();
    long r = s.size();
    if (dmax > 0) r = std::min<long>(r, dmax);
    if (tol > 0.0 && total > 0.0) {
        long rt = 0;
        while (rt < s.size() && s(rt) / total > tol) ++rt;
        r = std::min(r, rt);
    }
    return std::max<long>(r, 1);
}

// QR step moving the center from k to k+1; site k becomes left-isometric.
void push_right(Mps& psi, int k) {
    auto& a = psi.sites[k];
    const long dl = a.left_dim(), dr = a.right_dim();
    MatrixXcd m(2 * dl, dr);
    for (int s = 0; s < 2; ++s) m.block(s * dl, 0, dl, dr) = a.m[s];
    Eigen::HouseholderQR<MatrixXcd> qr(m);
    const long r = std::min(2 * dl, dr);
    const MatrixXcd q = qr.householderQ() * MatrixXcd::Identity(2 * dl, r);
    const MatrixXcd rr = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
    for (int s = 0; s < 2; ++s) a.m[s] = q.block(s * dl, 0, dl, r);
    auto& b = psi.sites[k + 1];
    for (int t = 0; t < 2; ++t) b.m[t] = rr * b.m[t];
}

// LQ step moving the center from k to k-1; site k becomes right-isometric.
void push_left(Mps& psi, int k) {
    auto& a = psi.sites[k];
    const long dl = a.left_dim(), dr = a.right_dim();
    MatrixXcd m(dl, 2 * dr);
    for (int s = 0; s < 2; ++s) m.block(0, s * dr, dl, dr) = a.m[s];
    Eigen::HouseholderQR<MatrixXcd> qr(m.adjoint());
    const long r = std::min(dl, 2 * dr);
    const MatrixXcd qt = qr.householderQ() * MatrixXcd::Identity(2 * dr, r);
    const MatrixXcd rt = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
    const MatrixXcd q = qt.adjoint();   // r x 2dr, right-isometric
    const MatrixXcd l = rt.adjoint();   // dl x r
    for (int s = 0; s < 2; ++s) a.m[s] = q.block(0, s * dr, r, dr);
    auto& b = psi.sites[k - 1];
    for (int t = 0; t < 2; ++t) b.m[t] = b.m[t] * l;
}

}  // namespace

std::vector<int> Mps::bond_dims() const {
    std::vector<int> out;
    if (sites.empty()) return out;
    out.push_back(static_cast<int>(sites[0].left_dim()));
    for (const auto& s : sites) out.push_back(static_cast<int>(s.right_dim()));
    return out;
}

int Mps::max_bond() const {
    int d = 0;
    for (int b : bond_dims()) d = std::max(d, b);
    return d;
}

Mps product_state(const std::vector<VectorXcd>& site_vectors) {
    if (site_vectors.empty()) throw config_error("product state needs at least one site");
    Mps psi;
    for (const auto& v : site_vectors) {
        if (v.size() != 2) throw config_error("site vectors must have dimension 2");
        SiteTensor t;
        for (int s = 0; s < 2; ++s) t.m[s] = v(s) * MatrixXcd::Ones(1, 1);
        psi.sites.push_back(std::move(t));
    }
    return psi;
}

cxd amplitude(const Mps& psi, const std::string& bits) {
    if (static_cast<int>(bits.size()) != psi.n()) throw config_error("bit string length mismatch");
    auto bit = [&](int k) {
        if (bits[k] != '0' && bits[k] != '1') throw config_error("bit strings are over {0,1}");
        return bits[k] - '0';
    };
    if (psi.boundary == Boundary::open) {
        MatrixXcd v = MatrixXcd::Ones(1, 1);
        for (int k = 0; k < psi.n(); ++k) v = v * psi.sites[k].m[bit(k)];
        return v(0, 0);
    }
    MatrixXcd prod = MatrixXcd::Identity(psi.sites[0].left_dim(), psi.sites[0].left_dim());
    for (int k = 0; k < psi.n(); ++k) prod = prod * psi.sites[k].m[bit(k)];
    return prod.trace();
}

VectorXcd to_dense(const Mps& psi) {
    const int n = psi.n();
    if (n > 16) throw config_error("dense conversion limited to n <= 16");
    if (psi.boundary == Boundary::open) {
        MatrixXcd m = MatrixXcd::Ones(1, 1);
        for (int k = 0; k < n; ++k) {
            const auto& a = psi.sites[k];
            MatrixXcd next(m.rows() * 2, a.right_dim());
            for (int s = 0; s < 2; ++s) {
                const MatrixXcd t = m * a.m[s];
                for (long i = 0; i < m.rows(); ++i) next.row(2 * i + s) = t.row(i);
            }
            m = std::move(next);
        }
        return m.col(0);
    }
    // Periodic: amplitudes by depth-first prefix products.
    const long d0 = psi.sites[0].left_dim();
    VectorXcd out(1L << n);
    std::vector<MatrixXcd> stack(n + 1);
    stack[0] = MatrixXcd::Identity(d0, d0);
    std::function<void(int, long)> rec = [&](int k, long idx) {
        if (k == n) {
            out(idx) = stack[n].trace();
            return;
        }
        for (int s = 0; s < 2; ++s) {
            stack[k + 1] = stack[k] * psi.sites[k].m[s];
            rec(k + 1, idx * 2 + s);
        }
    };
    rec(0, 0);
    return out;
}

Mps mps_from_dense(const VectorXcd& v, int dmax, double tol, double* discarded_sq) {
    const long d = v.size();
    int n = 0;
    while ((1L << n) < d) ++n;
    if (d < 2 || (1L << n) != d) throw config_error("dense state dimension must be a power of 2");

    const double norm0 = v.norm();
    if (norm0 <= 0.0) throw numerical_error("cannot decompose the zero vector");

    Mps psi;
    psi.sites.resize(n);
    MatrixXcd cur = (v / norm0).transpose();  // 1 x d, rows = left bond
    for (int k = 0; k < n; ++k) {
        const long dl = cur.rows();
        const long half = cur.cols() / 2;
        if (k == n - 1) {
            for (int s = 0; s < 2; ++s) psi.sites[k].m[s] = cur.middleCols(s * half, half);
            break;
        }
        MatrixXcd m(2 * dl, half);
        for (int s = 0; s < 2; ++s) m.block(s * dl, 0, dl, half) = cur.middleCols(s * half, half);
        auto svd = svd_thin(m);
        const long r = pick_rank(svd.s, dmax, tol);
        if (discarded_sq)
            for (long i = r; i < svd.s.size(); ++i) *discarded_sq += svd.s(i) * svd.s(i);
        for (int s = 0; s < 2; ++s) psi.sites[k].m[s] = svd.u.block(s * dl, 0, dl, r);
        cur = svd.s.head(r).asDiagonal() * svd.v.leftCols(r).adjoint();
    }
    for (int s = 0; s < 2; ++s) psi.sites[n - 1].m[s] *= norm0;
    psi.form = CanonicalForm::mixed;
    psi.center = n - 1;
    return psi;
}

double mps_norm(const Mps& psi) {
    if (psi.boundary == Boundary::open) {
        MatrixXcd l = MatrixXcd::Identity(1, 1);
        for (const auto& a : psi.sites) {
            MatrixXcd next = MatrixXcd::Zero(a.right_dim(), a.right_dim());
            for (int s = 0; s < 2; ++s) next += a.m[s].adjoint() * l * a.m[s];
            l = std::move(next);
        }
        return std::sqrt(std::max(0.0, l(0, 0).real()));
    }
    return to_dense(psi).norm();
}

Mps normalized(const Mps& psi) {
    const double nu = mps_norm(psi);
    if (nu <= 0.0) throw numerical_error("cannot normalize the zero state");
    Mps out = psi;
    const int at = out.form != CanonicalForm::none && out.center >= 0 ? out.center : 0;
    for (int s = 0; s < 2; ++s) out.sites[at].m[s] /= nu;
    return out;
}

Mps canonicalize(const Mps& psi, CanonicalForm target, int center) {
    require_open(psi, "canonicalize");
    if (target == CanonicalForm::none) throw config_error("cannot canonicalize to 'none'");
    Mps out = psi;
    const int n = out.n();
    if (target == CanonicalForm::left) center = n - 1;
    if (target == CanonicalForm::right) center = 0;
    if (center < 0 || center >= n) throw config_error("center out of range");
    for (int k = 0; k < center; ++k) push_right(out, k);
    for (int k = n - 1; k > center; --k) push_left(out, k);
    out.form = target;
    out.center = center;
    return out;
}

void move_center(Mps& psi, int to) {
    require_open(psi, "move_center");
    if (to < 0 || to >= psi.n()) throw config_error("center out of range");
    if (psi.form == CanonicalForm::none || psi.center < 0) {
        psi = canonicalize(psi, CanonicalForm::mixed, to);
        return;
    }
    while (psi.center < to) {
        push_right(psi, psi.center);
        ++psi.center;
    }
    while (psi.center > to) {
        push_left(psi, psi.center);
        --psi.center;
    }
    psi.form = CanonicalForm::mixed;
}

TruncationResult truncate(const Mps& psi, int dmax, double tol) {
    require_open(psi, "truncate");
    const int n = psi.n();
    Mps work = canonicalize(psi, CanonicalForm::right);
    const double norm0 = mps_norm(work);
    if (norm0 <= 0.0) throw numerical_error("cannot truncate the zero state");
    for (int s = 0; s < 2; ++s) work.sites[0].m[s] /= norm0;

    double disc = 0.0;
    for (int c = 0; c + 1 < n; ++c) {
        auto& a = work.sites[c];
        const long dl = a.left_dim(), dr = a.right_dim();
        MatrixXcd m(2 * dl, dr);
        for (int s = 0; s < 2; ++s) m.block(s * dl, 0, dl, dr) = a.m[s];
        auto svd = svd_thin(m);
        const long r = pick_rank(svd.s, dmax, tol);
        for (long i = r; i < svd.s.size(); ++i) disc += svd.s(i) * svd.s(i);
        for (int s = 0; s < 2; ++s) a.m[s] = svd.u.block(s * dl, 0, dl, r);
        const MatrixXcd carry = svd.s.head(r).asDiagonal() * svd.v.leftCols(r).adjoint();
        auto& b = work.sites[c + 1];
        for (int t = 0; t < 2; ++t) b.m[t] = carry * b.m[t];
    }
    double tail = 0.0;
    for (int s = 0; s < 2; ++s) tail += work.sites[n - 1].m[s].squaredNorm();
    const double nu = std::sqrt(tail);
    if (nu <= 0.0) throw numerical_error("truncation removed the entire state");
    for (int s = 0; s < 2; ++s) work.sites[n - 1].m[s] /= nu;
    work.form = CanonicalForm::mixed;
    work.center = n - 1;

    TruncationResult out;
    out.state = std::move(work);
    out.error = std::sqrt(disc);
    out.norm_factor = norm0 * nu;
    return out;
}

int SchmidtData::rank(double tol) const {
    int r = 0;
    for (long i = 0; i < values.size(); ++i)
        if (values(i) > tol) ++r;
    return r;
}

SchmidtData schmidt_spectrum(const Mps& psi, int cut) {
    require_open(psi, "schmidt_spectrum");
    if (cut < 1 || cut >= psi.n()) throw config_error("cut must split the chain");
    Mps work = canonicalize(normalized(psi), CanonicalForm::mixed, cut);
    const auto& a = work.sites[cut];
    const long dl = a.left_dim(), dr = a.right_dim();
    MatrixXcd m(dl, 2 * dr);
    for (int s = 0; s < 2; ++s) m.block(0, s * dr, dl, dr) = a.m[s];
    SchmidtData out;
    out.cut = cut;
    out.values = svd_thin(m, false).s;
    return out;
}

cxd expectation(const Mps& psi, const MatrixXcd& op, int first_site, int width) {
    require_open(psi, "expectation");
    const int n = psi.n();
    if (width != 1 && width != 2) throw config_error("expectation supports width 1 or 2");
    if (first_site < 0 || first_site + width > n) throw config_error("window out of range");
    const long d = 1L << width;
    if (op.rows() != d || op.cols() != d) throw config_error("operator shape mismatch");

    MatrixXcd l = MatrixXcd::Identity(1, 1);
    for (int k = 0; k < first_site; ++k) {
        const auto& a = psi.sites[k];
        MatrixXcd next = MatrixXcd::Zero(a.right_dim(), a.right_dim());
        for (int s = 0; s < 2; ++s) next += a.m[s].adjoint() * l * a.m[s];
        l = std::move(next);
    }
    if (width == 1) {
        const auto& a = psi.sites[first_site];
        MatrixXcd next = MatrixXcd::Zero(a.right_dim(), a.right_dim());
        for (int sp = 0; sp < 2; ++sp)
            for (int s = 0; s < 2; ++s) {
                const cxd c = op(sp, s);
                if (c != cxd(0, 0)) next += c * (a.m[sp].adjoint() * l * a.m[s]);
            }
        l = std::move(next);
    } else {
        const auto& a = psi.sites[first_site];
        const auto& b = psi.sites[first_site + 1];
        MatrixXcd next = MatrixXcd::Zero(b.right_dim(), b.right_dim());
        for (int sp = 0; sp < 2; ++sp)
            for (int tp = 0; tp < 2; ++tp) {
                MatrixXcd acc = MatrixXcd::Zero(a.left_dim(), b.right_dim());
                for (int s = 0; s < 2; ++s)
                    for (int t = 0; t < 2; ++t) {
                        const cxd c = op(sp * 2 + tp, s * 2 + t);
                        if (c != cxd(0, 0)) acc += c * (a.m[s] * b.m[t]);
                    }
                next += (a.m[sp] * b.m[tp]).adjoint() * l * acc;
            }
        l = std::move(next);
    }
    for (int k = first_site + width; k < n; ++k) {
        const auto& a = psi.sites[k];
        MatrixXcd next = MatrixXcd::Zero(a.right_dim(), a.right_dim());
        for (int s = 0; s < 2; ++s) next += a.m[s].adjoint() * l * a.m[s];
        l = std::move(next);
    }
    return l(0, 0);
}

cxd overlap(const Mps& a, const Mps& b) {
    require_open(a, "overlap");
    require_open(b, "overlap");
    if (a.n() != b.n()) throw config_error("overlap needs equal lengths");
    MatrixXcd l = MatrixXcd::Identity(1, 1);
    for (int k = 0; k < a.n(); ++k) {
        MatrixXcd next = MatrixXcd::Zero(a.sites[k].right_dim(), b.sites[k].right_dim());
        for (int s = 0; s < 2; ++s) next += a.sites[k].m[s].adjoint() * l * b.sites[k].m[s];
        l = std::move(next);
    }
    return l(0, 0);
}

double energy(const Mps& psi, const SpinChainHamiltonian& h) {
    if (psi.n() != h.n) throw config_error("state/hamiltonian size mismatch");
    const double n2 = std::pow(mps_norm(psi), 2);
    if (n2 <= 0.0) throw numerical_error("energy of the zero state");
    double e = 0.0;
    for (const auto& t : h.terms) {
        if (t.width == 2 && t.first_site == h.n - 1)
            throw config_error("energy supports open boundary only");
        e += expectation(psi, t.op, t.first_site, t.width).real();
    }
    return h.energy_scale * e / n2;
}

void apply_two_site(Mps& psi, const MatrixXcd& gate, int bond, int dmax, double tol,
                    bool renormalize, double* discarded_sq, double* log_norm) {
    require_open(psi, "apply_two_site");
    if (bond < 0 || bond + 1 >= psi.n()) throw config_error("bond out of range");
    if (gate.rows() != 4 || gate.cols() != 4) throw config_error("two-site gate must be 4x4");
    move_center(psi, bond);

    auto& a = psi.sites[bond];
    auto& b = psi.sites[bond + 1];
    const long dl = a.left_dim(), dr = b.right_dim();

    MatrixXcd theta(2 * dl, 2 * dr);
    for (int s = 0; s < 2; ++s)
        for (int t = 0; t < 2; ++t) theta.block(s * dl, t * dr, dl, dr) = a.m[s] * b.m[t];
    MatrixXcd theta2 = MatrixXcd::Zero(2 * dl, 2 * dr);
    for (int sp = 0; sp < 2; ++sp)
        for (int tp = 0; tp < 2; ++tp)
            for (int s = 0; s < 2; ++s)
                for (int t = 0; t < 2; ++t) {
                    const cxd c = gate(sp * 2 + tp, s * 2 + t);
                    if (c != cxd(0, 0))
                        theta2.block(sp * dl, tp * dr, dl, dr) += c * theta.block(s * dl, t * dr, dl, dr);
                }

    auto svd = svd_thin(theta2);
    const double total_sq = svd.s.squaredNorm();
    if (total_sq <= 0.0) throw numerical_error("gate annihilated the state");
    const long r = pick_rank(svd.s, dmax, tol);
    VectorXd kept = svd.s.head(r);
    if (discarded_sq) *discarded_sq += 1.0 - kept.squaredNorm() / total_sq;
    if (renormalize) {
        const double nu = kept.norm();
        if (log_norm) *log_norm += std::log(nu);
        kept /= nu;
    }
    for (int s = 0; s < 2; ++s) a.m[s] = svd.u.block(s * dl, 0, dl, r);
    const MatrixXcd carry = kept.asDiagonal() * svd.v.leftCols(r).adjoint();
    for (int t = 0; t < 2; ++t) b.m[t] = carry.block(0, t * dr, r, dr);
    psi.form = CanonicalForm::mixed;
    psi.center = bond + 1;
}

Mps apply_local_unitary(const Mps& psi, const MatrixXcd& u, int first_site, int width,
                        int dmax, double tol, double* discarded_sq) {
    require_open(psi, "apply_local_unitary");
    if (width != 1 && width != 2) throw config_error("local unitaries act on 1 or 2 sites");
    if (first_site < 0 || first_site + width > psi.n()) throw config_error("window out of range");
    const long d = 1L << width;
    if (u.rows() != d || u.cols() != d) throw config_error("unitary shape mismatch");
    if ((u.adjoint() * u - MatrixXcd::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-10)
        throw config_error("operator is not unitary");

    Mps out = psi;
    if (width == 1) {
        const auto a = out.sites[first_site];
        for (int sp = 0; sp < 2; ++sp) {
            out.sites[first_site].m[sp] = u(sp, 0) * a.m[0] + u(sp, 1) * a.m[1];
        }
        return out;
    }
    apply_two_site(out, u, first_site, dmax, tol, false, discarded_sq, nullptr);
    return out;
}

void save_mps(const std::string& path, const Mps& psi) {
    nlohmann::json header;
    header["format"] = "mps";
    header["version"] = 1;
    header["n"] = psi.n();
    header["boundary"] = psi.boundary == Boundary::open ? "open" : "periodic";
    header["bonds"] = psi.bond_dims();
    header["dtype"] = "complex64";

    std::ofstream f(path, std::ios::binary);
    if (!f) throw config_error("cannot open '" + path + "' for writing");
    f << header.dump() << '\n';
    for (const auto& site : psi.sites)
        for (long a = 0; a < site.left_dim(); ++a)
            for (int s = 0; s < 2; ++s)
                for (long b = 0; b < site.right_dim(); ++b) {
                    const float re = static_cast<float>(site.m[s](a, b).real());
                    const float im = static_cast<float>(site.m[s](a, b).imag());
                    f.write(reinterpret_cast<const char*>(&re), sizeof re);
                    f.write(reinterpret_cast<const char*>(&im), sizeof im);
                }
    if (!f) throw numerical_error("short write to '" + path + "'");
}

Mps load_mps(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw config_error("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(f, line)) throw config_error("missing header in '" + path + "'");
    nlohmann::json header = nlohmann::json::parse(line, nullptr, false);
    if (header.is_discarded() || header.value("format", "") != "mps")
        throw config_error("'" + path + "' is not an mps file");
    const int n = header.at("n").get<int>();
    const auto bonds = header.at("bonds").get<std::vector<int>>();
    if (n < 1 || static_cast<int>(bonds.size()) != n + 1)
        throw config_error("corrupt mps header in '" + path + "'");

    Mps psi;
    psi.boundary = header.value("boundary", "open") == "periodic" ? Boundary::periodic : Boundary::open;
    psi.sites.resize(n);
    for (int k = 0; k < n; ++k) {
        const long dl = bonds[k], dr = bonds[k + 1];
        for (int s = 0; s < 2; ++s) psi.sites[k].m[s] = MatrixXcd::Zero(dl, dr);
        for (long a = 0; a < dl; ++a)
            for (int s = 0; s < 2; ++s)
                for (long b = 0; b < dr; ++b) {
                    float re = 0, im = 0;
                    f.read(reinterpret_cast<char*>(&re), sizeof re);
                    f.read(reinterpret_cast<char*>(&im), sizeof im);
                    psi.sites[k].m[s](a, b) = cxd(re, im);
                }
    }
    if (!f) throw config_error("truncated payload in '" + path + "'");
    return psi;
}

MatrixXcd ensemble_density(const MPSEnsemble& e) {
    if (e.states.empty() || e.states.size() != e.weights.size())
        throw config_error("ensemble needs matching weights and states");
    const int n = e.states[0].n();
    if (n > 10) throw config_error("dense ensemble density limited to n <= 10");
    const long d = 1L << n;
    MatrixXcd rho = MatrixXcd::Zero(d, d);
    for (size_t i = 0; i < e.states.size(); ++i) {
        if (e.states[i].n() != n) throw config_error("ensemble states must share the chain length");
        const VectorXcd v = to_dense(e.states[i]);
        rho.noalias() += e.weights[i] * (v * v.adjoint());
    }
    return rho;
}

}  // namespace thermix
