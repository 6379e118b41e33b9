// Batch driver for the thermix workflows. Each subcommand reads one JSON
// config (--seed and --out may override fields), writes CSV artifacts plus a
// manifest.json echoing the fully resolved configuration, and reports
// failures through the exit code: 2 for configuration errors, 3 for
// numerical ones. Same config and seed reproduce every CSV bit for bit.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "thermix/dense_oracle.hpp"
#include "thermix/hamiltonian.hpp"
#include "thermix/metts.hpp"
#include "thermix/mixture.hpp"
#include "thermix/mps.hpp"
#include "thermix/pauli.hpp"
#include "thermix/recovery.hpp"
#include "thermix/tangent.hpp"
#include "thermix/trotter.hpp"
#include "thermix/types.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace thermix;

namespace {

// %.17g round-trips doubles exactly and never consults the locale.
std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

class Csv {
  public:
    Csv(const fs::path& path, const std::vector<std::string>& header)
        : out_(path), columns_(header.size()) {
        if (!out_) throw config_error("cannot write " + path.string());
        write(header);
    }

    void row(const std::vector<std::string>& cells) {
        if (cells.size() != columns_) throw config_error("csv row width mismatch");
        write(cells);
    }

  private:
    void write(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

    std::ofstream out_;
    std::size_t columns_;
};

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw config_error(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw config_error("config root must be a JSON object");
    return j;
}

// Schema guard: a misspelled knob should fail loudly, not fall back to a default.
void check_keys(const json& j, std::initializer_list<const char*> allowed) {
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* k : allowed)
            if (item.key() == k) {
                known = true;
                break;
            }
        if (!known) throw config_error("unknown config key \"" + item.key() + "\"");
    }
}

const json& require(const json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end()) throw config_error(std::string("missing config key \"") + key + "\"");
    return *it;
}

double num_field(const json& j, const char* key) {
    const json& v = require(j, key);
    if (!v.is_number()) throw config_error(std::string("config key \"") + key + "\" must be a number");
    return v.get<double>();
}

double num_or(const json& j, const char* key, double fallback) {
    return j.contains(key) ? num_field(j, key) : fallback;
}

long int_field(const json& j, const char* key) {
    const json& v = require(j, key);
    if (!v.is_number_integer())
        throw config_error(std::string("config key \"") + key + "\" must be an integer");
    return v.get<long>();
}

long int_or(const json& j, const char* key, long fallback) {
    return j.contains(key) ? int_field(j, key) : fallback;
}

std::string str_field(const json& j, const char* key) {
    const json& v = require(j, key);
    if (!v.is_string()) throw config_error(std::string("config key \"") + key + "\" must be a string");
    return v.get<std::string>();
}

std::string str_or(const json& j, const char* key, const std::string& fallback) {
    return j.contains(key) ? str_field(j, key) : fallback;
}

bool bool_or(const json& j, const char* key, bool fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_boolean()) throw config_error(std::string("config key \"") + key + "\" must be a boolean");
    return v.get<bool>();
}

std::vector<long> int_list(const json& v, const char* key) {
    if (!v.is_array() || v.empty())
        throw config_error(std::string("config key \"") + key + "\" must be a non-empty array");
    std::vector<long> out;
    out.reserve(v.size());
    for (const auto& e : v) {
        if (!e.is_number_integer())
            throw config_error(std::string("config key \"") + key + "\" must hold integers");
        out.push_back(e.get<long>());
    }
    return out;
}

std::vector<double> num_list(const json& v, const char* key) {
    if (!v.is_array() || v.empty())
        throw config_error(std::string("config key \"") + key + "\" must be a non-empty array");
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& e : v) {
        if (!e.is_number())
            throw config_error(std::string("config key \"") + key + "\" must hold numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

// Row-major complex matrix written as [[ [re, im], ... ], ...], the same
// convention custom Hamiltonian terms use.
MatrixXcd matrix_from_pairs(const json& rows, const char* what) {
    if (!rows.is_array() || rows.empty())
        throw config_error(std::string(what) + " must be an array of matrix rows");
    const auto d = static_cast<Eigen::Index>(rows.size());
    MatrixXcd m(d, d);
    for (Eigen::Index r = 0; r < d; ++r) {
        const json& row = rows[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != d)
            throw config_error(std::string(what) + " must be square");
        for (Eigen::Index c = 0; c < d; ++c) {
            const json& cell = row[static_cast<std::size_t>(c)];
            if (!cell.is_array() || cell.size() != 2 || !cell[0].is_number() || !cell[1].is_number())
                throw config_error(std::string(what) + " entries must be [re, im] pairs");
            m(r, c) = cxd(cell[0].get<double>(), cell[1].get<double>());
        }
    }
    return m;
}

MatrixXcd named_pauli(const std::string& name, const char* what) {
    if (name == "X" || name == "x") return pauli_x();
    if (name == "Y" || name == "y") return pauli_y();
    if (name == "Z" || name == "z") return pauli_z();
    throw config_error(std::string(what) + " presets are \"X\", \"Y\", \"Z\"");
}

json fit_json(const ExpFit& f) {
    return json{{"rate", f.rate},
                {"log_amplitude", f.log_amplitude},
                {"r_squared", f.r_squared},
                {"points", f.points}};
}

void write_json_file(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw config_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

fs::path make_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw config_error("cannot create directory " + dir.string() + ": " + ec.message());
    return dir;
}

struct LoadedHamiltonian {
    SpinChainHamiltonian h;
    json resolved;
};

LoadedHamiltonian load_hamiltonian(const json& cfg) {
    const HamiltonianSpec spec = HamiltonianSpec::from_json(require(cfg, "hamiltonian"));
    return {build_hamiltonian(spec), spec.to_json()};
}

// ---------------------------------------------------------------- gibbs ----

json cmd_gibbs(const json& cfg, const fs::path& out) {
    check_keys(cfg, {"hamiltonian", "temperature", "seed", "out"});
    const auto [h, hj] = load_hamiltonian(cfg);
    const double t = num_field(cfg, "temperature");
    const auto g = gibbs_state(h, t);
    const int n = h.n;

    Csv obs(out / "gibbs.csv", {"quantity", "site", "value"});
    auto scalar = [&obs](const std::string& name, double v) { obs.row({name, "-1", fmt(v)}); };
    scalar("energy", g.energy);
    scalar("log_z", g.log_z);
    scalar("entropy", von_neumann_entropy(g.rho));
    for (int k = 0; k < n; ++k) {
        const MatrixXcd rk = partial_trace_sites(g.rho, n, {k});
        obs.row({"z", std::to_string(k), fmt((rk * pauli_z()).trace().real())});
        obs.row({"x", std::to_string(k), fmt((rk * pauli_x()).trace().real())});
    }
    for (int c = 1; c < n; ++c) {
        std::vector<int> keep(static_cast<std::size_t>(c));
        std::iota(keep.begin(), keep.end(), 0);
        scalar("cut_entropy_" + std::to_string(c),
               von_neumann_entropy(partial_trace_sites(g.rho, n, keep)));
    }

    const auto profile = correlation_decay_profile(g.rho, n);
    scalar("correlation_xi", profile.xi);
    scalar("correlation_r_squared", profile.r_squared);
    scalar("correlation_log_amplitude", profile.log_amplitude);

    Csv corr(out / "correlations.csv", {"distance", "max_connected"});
    for (std::size_t i = 0; i < profile.distances.size(); ++i)
        corr.row({std::to_string(profile.distances[i]), fmt(profile.max_connected[i])});

    std::cout << "gibbs: n=" << n << " T=" << fmt(t) << " energy=" << fmt(g.energy)
              << " xi=" << fmt(profile.xi) << '\n';
    return json{{"hamiltonian", hj}, {"temperature", t}};
}

// ---------------------------------------------------------------- metts ----

ChainConfig parse_chain_config(const json& j, std::uint64_t seed, json& resolved) {
    ChainConfig cc;
    cc.beta = num_field(j, "beta");
    cc.steps = int_field(j, "steps");
    cc.burn_in = int_or(j, "burn_in", cc.burn_in);
    cc.dmax = static_cast<int>(int_or(j, "dmax", cc.dmax));
    cc.tol = num_or(j, "tol", cc.tol);
    cc.dt = num_or(j, "dt", cc.dt);
    cc.trotter_order = static_cast<int>(int_or(j, "trotter_order", cc.trotter_order));
    cc.walkers = static_cast<int>(int_or(j, "walkers", cc.walkers));
    cc.seed = seed;
    const std::string schedule = str_or(j, "schedule", "alternating");
    if (schedule == "alternating")
        cc.schedule = BasisSchedule::alternating;
    else if (schedule == "fixed_z")
        cc.schedule = BasisSchedule::fixed_z;
    else
        throw config_error("schedule must be \"alternating\" or \"fixed_z\"");
    cc.validate();

    resolved["beta"] = cc.beta;
    resolved["steps"] = cc.steps;
    resolved["burn_in"] = cc.burn_in;
    resolved["dmax"] = cc.dmax;
    resolved["tol"] = cc.tol;
    resolved["dt"] = cc.dt;
    resolved["trotter_order"] = cc.trotter_order;
    resolved["walkers"] = cc.walkers;
    resolved["schedule"] = schedule;
    return cc;
}

json cmd_metts(const json& cfg, const fs::path& out, std::uint64_t seed, bool save_states_flag) {
    check_keys(cfg, {"hamiltonian", "beta", "steps", "burn_in", "dmax", "tol", "dt",
                     "trotter_order", "walkers", "schedule", "verify", "save_states", "seed",
                     "out"});
    const auto [h, hj] = load_hamiltonian(cfg);
    json resolved{{"hamiltonian", hj}};
    const ChainConfig cc = parse_chain_config(cfg, seed, resolved);
    const bool save_states = save_states_flag || bool_or(cfg, "save_states", false);
    const bool verify = bool_or(cfg, "verify", false);
    resolved["save_states"] = save_states;
    resolved["verify"] = verify;

    const fs::path state_dir = out / "states";
    if (save_states) make_dir(state_dir);

    Csv chain(out / "chain.csv", {"step", "basis_string", "energy", "log_weight", "bond_max"});
    json files = json::array();
    json walkers = json::array();
    json steps = json::array();
    std::vector<double> energies;
    long index = 0;
    run_chain_stream(cc, h, [&](const MettsSample& s, int walker) {
        const double e = energy(s.state, h);
        chain.row({std::to_string(s.step), s.basis_string, fmt(e), fmt(s.log_weight),
                   std::to_string(s.state.max_bond())});
        energies.push_back(e);
        walkers.push_back(walker);
        steps.push_back(s.step);
        if (save_states) {
            char name[32];
            std::snprintf(name, sizeof(name), "sample_%04ld.mps", index);
            save_mps((state_dir / name).string(), s.state);
            files.push_back(std::string("states/") + name);
        }
        ++index;
    });

    const auto count = static_cast<double>(energies.size());
    const double mean = std::accumulate(energies.begin(), energies.end(), 0.0) / count;
    double var = 0.0;
    for (double e : energies) var += (e - mean) * (e - mean);
    const double se = energies.size() > 1 ? std::sqrt(var / (count - 1.0) / count) : 0.0;

    json em{{"generator", "metts"}, {"seed", seed},     {"beta", cc.beta},
            {"samples", index},     {"walkers", cc.walkers}, {"weight_each", 1.0 / count},
            {"files", files},       {"walker", walkers},     {"step", steps}};
    if (verify) {
        const double d = verify_metts_identity(h, cc.beta);
        em["identity_distance"] = d;
        std::cout << "metts: identity distance " << fmt(d) << '\n';
    }
    write_json_file(out / "ensemble.json", em);

    std::cout << "metts: " << index << " samples, energy " << fmt(mean) << " +/- " << fmt(se)
              << '\n';
    return resolved;
}

// ------------------------------------------------------------- recovery ----

json cmd_recovery(const json& cfg, const fs::path& out) {
    check_keys(cfg, {"hamiltonian", "temperature", "buffer_widths", "with_kmap", "bridge",
                     "seed", "out"});
    const auto [h, hj] = load_hamiltonian(cfg);
    const double t = num_field(cfg, "temperature");
    const auto widths_l = int_list(require(cfg, "buffer_widths"), "buffer_widths");
    const std::vector<int> widths(widths_l.begin(), widths_l.end());
    const bool with_kmap = bool_or(cfg, "with_kmap", true);

    const auto prof = recovery_profile(h, t, widths, with_kmap);

    Csv csv(out / "recovery.csv",
            {"buffer_width", "trace_error_petz", "trace_error_kmap", "cmi", "bridge_defect"});
    for (std::size_t i = 0; i < prof.buffer_sizes.size(); ++i)
        csv.row({std::to_string(prof.buffer_sizes[i]), fmt(prof.petz_errors[i]),
                 with_kmap ? fmt(prof.kmap_errors[i]) : std::string(), fmt(prof.cmis[i]),
                 with_kmap ? fmt(prof.bridge_defects[i]) : std::string()});

    write_json_file(out / "recovery_fit.json",
                    json{{"fit_linear", fit_json(prof.fit_linear)},
                         {"fit_sqrt", fit_json(prof.fit_sqrt)},
                         {"monotone_nonincreasing", prof.monotone_nonincreasing}});

    json resolved{{"hamiltonian", hj},
                  {"temperature", t},
                  {"buffer_widths", widths},
                  {"with_kmap", with_kmap}};

    // Optional window study of the bridge operator around one fixed cut.
    if (cfg.contains("bridge")) {
        const json& b = cfg.at("bridge");
        check_keys(b, {"alpha_end", "beta_end", "windows"});
        const RegionSplit split{static_cast<int>(int_field(b, "alpha_end")),
                                static_cast<int>(int_field(b, "beta_end")), h.n};
        const auto windows = int_list(require(b, "windows"), "windows");
        const auto bridge = bridge_operator(h, split, t);
        Csv bcsv(out / "bridge.csv", {"window", "defect", "defect_normalized",
                                      "condition_number", "clamped_eigenvalues"});
        auto brow = [&bcsv](const BridgeOperator& x) {
            bcsv.row({std::to_string(x.window), fmt(x.defect), fmt(x.defect_normalized),
                      fmt(x.condition_number), std::to_string(x.clamped_eigenvalues)});
        };
        brow(bridge);
        for (long w : windows)
            if (w != h.n) brow(truncate_bridge(h, bridge, static_cast<int>(w)));
        resolved["bridge"] = json{{"alpha_end", split.alpha_end},
                                  {"beta_end", split.beta_end},
                                  {"windows", windows}};
    }

    std::cout << "recovery: " << widths.size() << " buffer widths, petz decay rate "
              << fmt(prof.fit_linear.rate) << " (r2 " << fmt(prof.fit_linear.r_squared) << ")\n";
    return resolved;
}

// -------------------------------------------------------------- mixture ----

json cmd_mixture(const json& cfg, const fs::path& out, std::uint64_t seed) {
    check_keys(cfg, {"hamiltonian", "temperature", "block_sites", "c_width", "eps_reference",
                     "drop_tol", "slocc_trials", "seed", "out"});
    const auto [h, hj] = load_hamiltonian(cfg);
    const double t = num_field(cfg, "temperature");
    const auto block_sites = static_cast<int>(int_field(cfg, "block_sites"));
    const auto c_width = static_cast<int>(int_field(cfg, "c_width"));
    const double eps_reference = num_or(cfg, "eps_reference", 1e-2);
    const double drop_tol = num_or(cfg, "drop_tol", 1e-14);
    const auto slocc_trials = int_or(cfg, "slocc_trials", 0);

    const auto plan = plan_blocks(h.n, block_sites, c_width, eps_reference);
    const auto build = build_mixture(h, t, plan, drop_tol);

    const fs::path term_dir = make_dir(out / "terms");
    json files = json::array();
    for (std::size_t j = 0; j < build.ensemble.terms.size(); ++j) {
        char name[32];
        std::snprintf(name, sizeof(name), "term_%04zu.mps", j);
        save_mps((term_dir / name).string(), build.ensemble.terms[j]);
        files.push_back(std::string("terms/") + name);
    }

    const auto& ra = build.audit.ranks;
    Csv audit(out / "audit.csv", {"term_id", "cut", "rank", "bound"});
    for (std::size_t term = 0; term < ra.term_ranks.size(); ++term)
        for (std::size_t c = 0; c < ra.term_ranks[term].size(); ++c)
            audit.row({std::to_string(term), std::to_string(c + 1),
                       std::to_string(ra.term_ranks[term][c]), std::to_string(ra.cut_bounds[c])});

    json a{{"weight_sum", build.audit.weight_sum},
           {"terms", build.audit.terms},
           {"trace_distance", build.audit.trace_distance},
           {"telescoping", build.audit.telescoping},
           {"reconstruction_defect", build.audit.reconstruction_defect},
           {"block_errors", build.audit.block_errors},
           {"decoupling_errors", build.audit.decoupling_errors},
           {"kraus_ranks", build.audit.kraus_ranks},
           {"max_rank", ra.max_rank},
           {"max_bound", ra.max_bound},
           {"ranks_satisfied", ra.satisfied},
           {"bond_bound", plan.bond_bound},
           {"bond_bound_vacuous", plan.bond_bound_vacuous},
           {"prescribed_block_sites", plan.prescribed_block_sites}};
    if (slocc_trials > 0) {
        const auto sc = verify_slocc_monotonicity(static_cast<int>(slocc_trials), seed);
        a["slocc"] = json{{"trials", sc.trials},
                          {"failures", sc.failures},
                          {"max_rank_seen", sc.max_rank_seen},
                          {"passed", sc.passed()}};
    }
    write_json_file(out / "mixture.json", json{{"p", build.ensemble.weights},
                                               {"files", files},
                                               {"audit", a}});

    std::cout << "mixture: " << build.audit.terms << " terms, distance "
              << fmt(build.audit.trace_distance) << " <= telescoping "
              << fmt(build.audit.telescoping) << '\n';
    return json{{"hamiltonian", hj},      {"temperature", t},
                {"block_sites", block_sites}, {"c_width", c_width},
                {"eps_reference", eps_reference}, {"drop_tol", drop_tol},
                {"slocc_trials", slocc_trials}};
}

// --------------------------------------------------------------- quench ----

json cmd_quench(const json& cfg, const fs::path& out, std::uint64_t seed) {
    check_keys(cfg, {"hamiltonian", "ensemble", "u", "first_site", "times", "dt", "method",
                     "dmax", "tol", "trotter_order", "cutoff", "observables", "seed", "out"});
    const auto [h, hj] = load_hamiltonian(cfg);
    json resolved{{"hamiltonian", hj}};

    const json& ej = require(cfg, "ensemble");
    const std::string generator = str_field(ej, "generator");
    MPSEnsemble ensemble;
    json ensemble_resolved{{"generator", generator}};
    if (generator == "product") {
        check_keys(ej, {"generator", "bits"});
        const std::string bits = str_field(ej, "bits");
        if (static_cast<int>(bits.size()) != h.n)
            throw config_error("ensemble bits length must equal the chain length");
        ensemble.states.push_back(product_from_string(bits, MeasBasis::z));
        ensemble.weights = {1.0};
        ensemble.generator = "product";
        ensemble_resolved["bits"] = bits;
    } else if (generator == "metts") {
        check_keys(ej, {"generator", "beta", "steps", "burn_in", "dmax", "tol", "dt",
                        "trotter_order", "walkers", "schedule"});
        const ChainConfig cc = parse_chain_config(ej, seed, ensemble_resolved);
        ensemble = run_chain(cc, h);
    } else {
        throw config_error("ensemble generator must be \"metts\" or \"product\"");
    }
    resolved["ensemble"] = ensemble_resolved;

    QuenchConfig qc;
    const json& uj = require(cfg, "u");
    if (uj.is_string()) {
        qc.u = named_pauli(uj.get<std::string>(), "u");
        qc.u_width = 1;
    } else {
        qc.u = matrix_from_pairs(uj, "u");
        if (qc.u.rows() == 2)
            qc.u_width = 1;
        else if (qc.u.rows() == 4)
            qc.u_width = 2;
        else
            throw config_error("u must be 2x2 or 4x4");
    }
    qc.first_site = static_cast<int>(int_field(cfg, "first_site"));
    qc.times = num_list(require(cfg, "times"), "times");
    qc.dt = num_or(cfg, "dt", qc.dt);
    const std::string method = str_or(cfg, "method", "tdvp");
    if (method == "tdvp")
        qc.method = EvolveMethod::tdvp;
    else if (method == "tebd")
        qc.method = EvolveMethod::tebd;
    else
        throw config_error("method must be \"tdvp\" or \"tebd\"");
    qc.dmax = static_cast<int>(int_or(cfg, "dmax", kUnlimitedBond));
    qc.tol = num_or(cfg, "tol", qc.tol);
    qc.trotter_order = static_cast<int>(int_or(cfg, "trotter_order", qc.trotter_order));
    qc.cutoff = num_or(cfg, "cutoff", qc.cutoff);

    json obs_resolved = json::array();
    if (cfg.contains("observables")) {
        for (const json& o : cfg.at("observables")) {
            NamedObservable ob;
            if (o.is_string()) {
                ob.name = o.get<std::string>();
                ob.op = named_pauli(ob.name, "observable");
                ob.width = 1;
            } else if (o.is_object()) {
                check_keys(o, {"name", "matrix"});
                ob.name = str_field(o, "name");
                ob.op = matrix_from_pairs(require(o, "matrix"), "observable matrix");
                if (ob.op.rows() == 2)
                    ob.width = 1;
                else if (ob.op.rows() == 4)
                    ob.width = 2;
                else
                    throw config_error("observable matrices must be 2x2 or 4x4");
            } else {
                throw config_error("observables must be preset names or {name, matrix} objects");
            }
            obs_resolved.push_back(ob.name);
            qc.observables.push_back(std::move(ob));
        }
    } else {
        obs_resolved.push_back("Z");
    }
    qc.validate(h.n);

    const auto traj = quench_protocol(ensemble, h, qc);

    // dmax column: 0 stands for "no cap" (tebd without a bond limit).
    const std::string dmax_cell =
        traj.dmax == kUnlimitedBond ? "0" : std::to_string(traj.dmax);
    Csv csv(out / "trajectory.csv",
            {"time", "site", "observable", "mean", "stderr", "method", "dmax"});
    for (const auto& r : traj.rows)
        csv.row({fmt(r.time), std::to_string(r.site), r.observable, fmt(r.mean),
                 fmt(r.std_error), traj.method, dmax_cell});

    resolved["u"] = uj;
    resolved["first_site"] = qc.first_site;
    resolved["times"] = qc.times;
    resolved["dt"] = qc.dt;
    resolved["method"] = method;
    resolved["dmax"] = qc.dmax == kUnlimitedBond ? 0 : qc.dmax;
    resolved["tol"] = qc.tol;
    resolved["trotter_order"] = qc.trotter_order;
    resolved["cutoff"] = qc.cutoff;
    resolved["observables"] = obs_resolved;

    std::cout << "quench: " << ensemble.states.size() << " terms, " << qc.times.size()
              << " report times, method " << traj.method << '\n';
    return resolved;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"thermix: thermal spin-chain workflows"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed_override;
    std::optional<std::string> out_override;
    bool save_states = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON run configuration")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--seed", seed_override, "override the config seed");
        sub->add_option("--out", out_override, "override the output directory");
        return sub;
    };
    CLI::App* gibbs =
        add_common(app.add_subcommand("gibbs", "dense Gibbs observables and correlations"));
    CLI::App* metts =
        add_common(app.add_subcommand("metts", "sample thermal states along a METTS chain"));
    metts->add_flag("--save-states", save_states, "write every sample as an .mps file");
    CLI::App* recovery =
        add_common(app.add_subcommand("recovery", "Petz/K-map recovery and bridge profiles"));
    CLI::App* mixture = add_common(
        app.add_subcommand("mixture", "Gibbs state as a convex combination of MPS terms"));
    CLI::App* quench =
        add_common(app.add_subcommand("quench", "local quench trajectories over an ensemble"));

    try {
        app.parse(argc, argv);

        const json cfg = load_config(config_path);
        std::uint64_t seed = 0;
        if (seed_override)
            seed = *seed_override;
        else if (cfg.contains("seed")) {
            if (!cfg.at("seed").is_number_integer() || cfg.at("seed").get<long long>() < 0)
                throw config_error("seed must be a non-negative integer");
            seed = cfg.at("seed").get<std::uint64_t>();
        }
        const std::string out_str =
            out_override ? *out_override : str_field(cfg, "out");
        const fs::path out = make_dir(out_str);

        json resolved;
        std::string name;
        if (gibbs->parsed()) {
            name = "gibbs";
            resolved = cmd_gibbs(cfg, out);
        } else if (metts->parsed()) {
            name = "metts";
            resolved = cmd_metts(cfg, out, seed, save_states);
        } else if (recovery->parsed()) {
            name = "recovery";
            resolved = cmd_recovery(cfg, out);
        } else if (mixture->parsed()) {
            name = "mixture";
            resolved = cmd_mixture(cfg, out, seed);
        } else if (quench->parsed()) {
            name = "quench";
            resolved = cmd_quench(cfg, out, seed);
        }
        resolved["seed"] = seed;
        resolved["out"] = out_str;
        json manifest{{"artifact_version", kVersion}, {"subcommand", name}, {"config", resolved}};
        write_json_file(out / "manifest.json", manifest);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const numerical_error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
