// Python surface for the thermix core. Hamiltonians come in as plain dicts
// (the same schema the CLI configs use), states are opaque Mps handles with
// numpy conversions, and the heavier workflows return plain dicts/lists so
// notebooks can consume them without further wrapping.

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "thermix/dense_oracle.hpp"
#include "thermix/hamiltonian.hpp"
#include "thermix/metts.hpp"
#include "thermix/mixture.hpp"
#include "thermix/mps.hpp"
#include "thermix/recovery.hpp"
#include "thermix/tangent.hpp"
#include "thermix/trotter.hpp"
#include "thermix/types.hpp"

namespace py = pybind11;
using namespace thermix;

namespace {

SpinChainHamiltonian hamiltonian_from_dict(const py::dict& spec) {
    const std::string dumped =
        py::cast<std::string>(py::module_::import("json").attr("dumps")(spec));
    return build_hamiltonian(HamiltonianSpec::from_json(nlohmann::json::parse(dumped)));
}

BasisSchedule schedule_from_name(const std::string& name) {
    if (name == "alternating") return BasisSchedule::alternating;
    if (name == "fixed_z") return BasisSchedule::fixed_z;
    throw config_error("schedule must be \"alternating\" or \"fixed_z\"");
}

EvolveMethod method_from_name(const std::string& name) {
    if (name == "tdvp") return EvolveMethod::tdvp;
    if (name == "tebd") return EvolveMethod::tebd;
    throw config_error("method must be \"tdvp\" or \"tebd\"");
}

py::dict audit_dict(const MixtureAudit& a) {
    py::dict d;
    d["weight_sum"] = a.weight_sum;
    d["terms"] = a.terms;
    d["trace_distance"] = a.trace_distance;
    d["telescoping"] = a.telescoping;
    d["reconstruction_defect"] = a.reconstruction_defect;
    d["block_errors"] = a.block_errors;
    d["decoupling_errors"] = a.decoupling_errors;
    d["kraus_ranks"] = a.kraus_ranks;
    d["max_rank"] = a.ranks.max_rank;
    d["max_bound"] = a.ranks.max_bound;
    d["ranks_satisfied"] = a.ranks.satisfied;
    d["cut_bounds"] = a.ranks.cut_bounds;
    d["term_ranks"] = a.ranks.term_ranks;
    return d;
}

py::dict fit_dict(const ExpFit& f) {
    py::dict d;
    d["rate"] = f.rate;
    d["log_amplitude"] = f.log_amplitude;
    d["r_squared"] = f.r_squared;
    d["points"] = f.points;
    return d;
}

}  // namespace

PYBIND11_MODULE(thermix, m) {
    m.doc() = "thermal spin chains: Gibbs states as convex combinations of MPS";
    m.attr("__version__") = kVersion;

    py::register_exception<config_error>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<numerical_error>(m, "NumericalError", PyExc_RuntimeError);

    py::class_<SpinChainHamiltonian>(m, "Hamiltonian")
        .def_readonly("n", &SpinChainHamiltonian::n)
        .def_readonly("energy_scale", &SpinChainHamiltonian::energy_scale)
        .def_readonly("preset", &SpinChainHamiltonian::preset)
        .def_property_readonly("terms",
                               [](const SpinChainHamiltonian& h) { return h.terms.size(); })
        .def("__repr__", [](const SpinChainHamiltonian& h) {
            return "<Hamiltonian " + h.preset + " n=" + std::to_string(h.n) + ">";
        });

    m.def("hamiltonian", &hamiltonian_from_dict, py::arg("spec"),
          "Build a spin-chain Hamiltonian from a spec dict (same schema as CLI configs).");
    m.def("dense_hamiltonian", &assemble_dense_physical, py::arg("h"),
          "Full 2^n x 2^n matrix in physical units.");

    py::class_<Mps>(m, "Mps")
        .def_property_readonly("n", &Mps::n)
        .def_property_readonly("bond_dims", &Mps::bond_dims)
        .def_property_readonly("max_bond", &Mps::max_bond)
        .def("to_dense", &to_dense)
        .def("norm", &mps_norm)
        .def("save", [](const Mps& psi, const std::string& path) { save_mps(path, psi); },
             py::arg("path"))
        .def("__repr__", [](const Mps& psi) {
            return "<Mps n=" + std::to_string(psi.n()) +
                   " max_bond=" + std::to_string(psi.max_bond()) + ">";
        });

    m.def(
        "mps_from_dense",
        [](const VectorXcd& v, int dmax, double tol) { return mps_from_dense(v, dmax, tol); },
        py::arg("vector"), py::arg("dmax") = 0, py::arg("tol") = 0.0);
    m.def(
        "product_mps",
        [](const std::string& bits) { return product_from_string(bits, MeasBasis::z); },
        py::arg("bits"), "Computational-basis product state from a 0/1 string.");
    m.def("load_mps", &load_mps, py::arg("path"));
    m.def("normalized", &normalized, py::arg("psi"));
    m.def(
        "truncate",
        [](const Mps& psi, int dmax, double tol) {
            const auto r = truncate(psi, dmax, tol);
            return py::make_tuple(r.state, r.error);
        },
        py::arg("psi"), py::arg("dmax"), py::arg("tol") = 0.0,
        "Returns (state, truncation_error).");
    m.def(
        "schmidt_values",
        [](const Mps& psi, int cut) { return schmidt_spectrum(psi, cut).values; },
        py::arg("psi"), py::arg("cut"));
    m.def("overlap", &overlap, py::arg("a"), py::arg("b"));
    m.def("expectation", &expectation, py::arg("psi"), py::arg("op"), py::arg("first_site"),
          py::arg("width") = 1, "Raw (unnormalized) <psi|op|psi>.");
    m.def("energy", &energy, py::arg("psi"), py::arg("h"),
          "Normalized energy in physical units.");
    m.def(
        "apply_local_unitary",
        [](const Mps& psi, const MatrixXcd& u, int first_site, int width) {
            return apply_local_unitary(psi, u, first_site, width);
        },
        py::arg("psi"), py::arg("u"), py::arg("first_site"), py::arg("width") = 1);

    m.def(
        "gibbs",
        [](const SpinChainHamiltonian& h, double temperature) {
            const auto g = gibbs_state(h, temperature);
            py::dict d;
            d["rho"] = g.rho;
            d["log_z"] = g.log_z;
            d["energy"] = g.energy;
            d["temperature"] = g.temperature;
            return d;
        },
        py::arg("h"), py::arg("temperature"), "Dense Gibbs state with log Z and energy.");
    m.def("trace_distance", &trace_distance, py::arg("a"), py::arg("b"));
    m.def("von_neumann_entropy", &von_neumann_entropy, py::arg("rho"));
    m.def("mutual_information", &mutual_information, py::arg("rho"), py::arg("n"),
          py::arg("region_a"));
    m.def(
        "conditional_mutual_information",
        [](const MatrixXcd& rho, int alpha_end, int beta_end, int n) {
            return conditional_mutual_information(rho, RegionSplit{alpha_end, beta_end, n});
        },
        py::arg("rho"), py::arg("alpha_end"), py::arg("beta_end"), py::arg("n"));
    m.def(
        "correlation_profile",
        [](const MatrixXcd& rho, int n) {
            const auto p = correlation_decay_profile(rho, n);
            py::dict d;
            d["distances"] = p.distances;
            d["max_connected"] = p.max_connected;
            d["xi"] = p.xi;
            d["r_squared"] = p.r_squared;
            return d;
        },
        py::arg("rho"), py::arg("n"));

    m.def(
        "evolve_tebd",
        [](const Mps& psi, const SpinChainHamiltonian& h, double dt, long steps, int order,
           int dmax, double tol, bool imaginary) {
            const auto gates = trotter_gates(h, dt, order, imaginary);
            const auto r = evolve(psi, gates, steps, dmax == 0 ? kUnlimitedBond : dmax, tol);
            return py::make_tuple(r.state, r.truncation_error, r.log_norm);
        },
        py::arg("psi"), py::arg("h"), py::arg("dt"), py::arg("steps"), py::arg("order") = 2,
        py::arg("dmax") = 0, py::arg("tol") = 0.0, py::arg("imaginary") = false,
        "Trotterized evolution; dmax = 0 leaves the bond dimension uncapped. "
        "Returns (state, truncation_error, log_norm).");

    py::class_<MPSEnsemble>(m, "Ensemble")
        .def_readonly("weights", &MPSEnsemble::weights)
        .def_readonly("states", &MPSEnsemble::states)
        .def_readonly("generator", &MPSEnsemble::generator)
        .def_readonly("seed", &MPSEnsemble::seed)
        .def_readonly("beta", &MPSEnsemble::beta)
        .def("density", &ensemble_density, "Dense density matrix (n <= 10).")
        .def(
            "estimate",
            [](const MPSEnsemble& e, const MatrixXcd& op, int first_site, int width) {
                const auto r = estimate_observable(e, op, first_site, width);
                py::dict d;
                d["mean"] = r.mean;
                d["std_error"] = r.std_error;
                d["tau_int"] = r.tau_int;
                d["se_defined"] = r.se_defined;
                return d;
            },
            py::arg("op"), py::arg("first_site"), py::arg("width") = 1)
        .def("__len__", [](const MPSEnsemble& e) { return e.states.size(); });

    m.def(
        "ensemble",
        [](std::vector<Mps> states, std::vector<double> weights) {
            if (states.empty()) throw config_error("ensemble needs at least one state");
            MPSEnsemble e;
            if (weights.empty())
                weights.assign(states.size(), 1.0 / static_cast<double>(states.size()));
            if (weights.size() != states.size())
                throw config_error("ensemble weights and states are misaligned");
            e.states = std::move(states);
            e.weights = std::move(weights);
            e.generator = "manual";
            return e;
        },
        py::arg("states"), py::arg("weights") = std::vector<double>{},
        "Ensemble from explicit states; empty weights mean uniform.");

    m.def(
        "metts_chain",
        [](const SpinChainHamiltonian& h, double beta, long steps, long burn_in, int dmax,
           double tol, int walkers, std::uint64_t seed, double dt, int trotter_order,
           const std::string& schedule) {
            ChainConfig cfg;
            cfg.beta = beta;
            cfg.steps = steps;
            cfg.burn_in = burn_in;
            cfg.dmax = dmax;
            cfg.tol = tol;
            cfg.walkers = walkers;
            cfg.seed = seed;
            cfg.dt = dt;
            cfg.trotter_order = trotter_order;
            cfg.schedule = schedule_from_name(schedule);
            return run_chain(cfg, h);
        },
        py::arg("h"), py::arg("beta"), py::arg("steps"), py::arg("burn_in") = 10,
        py::arg("dmax") = 64, py::arg("tol") = 1e-8, py::arg("walkers") = 1,
        py::arg("seed") = 0, py::arg("dt") = 0.025, py::arg("trotter_order") = 2,
        py::arg("schedule") = "alternating",
        "Sample a METTS ensemble (uniform weights, walker-major order).");
    m.def("verify_metts_identity", &verify_metts_identity, py::arg("h"), py::arg("beta"),
          "Trace distance between the enumerated METTS mixture and the Gibbs state (n <= 6).");

    m.def(
        "recovery_profile",
        [](const SpinChainHamiltonian& h, double temperature, const std::vector<int>& widths,
           bool with_kmap) {
            const auto p = recovery_profile(h, temperature, widths, with_kmap);
            py::dict d;
            d["buffer_sizes"] = p.buffer_sizes;
            d["petz_errors"] = p.petz_errors;
            d["cmis"] = p.cmis;
            d["kmap_errors"] = p.kmap_errors;
            d["bridge_defects"] = p.bridge_defects;
            d["fit_linear"] = fit_dict(p.fit_linear);
            d["fit_sqrt"] = fit_dict(p.fit_sqrt);
            d["monotone_nonincreasing"] = p.monotone_nonincreasing;
            return d;
        },
        py::arg("h"), py::arg("temperature"), py::arg("buffer_widths"),
        py::arg("with_kmap") = false,
        "Petz (optionally K-map) recovery errors over centred buffer widths.");

    m.def(
        "build_mixture",
        [](const SpinChainHamiltonian& h, double temperature, int block_sites, int c_width,
           double eps_reference, double drop_tol) {
            const auto plan = plan_blocks(h.n, block_sites, c_width, eps_reference);
            const auto built = build_mixture(h, temperature, plan, drop_tol);
            py::dict d;
            d["weights"] = built.ensemble.weights;
            d["terms"] = built.ensemble.terms;
            d["audit"] = audit_dict(built.audit);
            d["bond_bound"] = plan.bond_bound;
            d["bond_bound_vacuous"] = plan.bond_bound_vacuous;
            return d;
        },
        py::arg("h"), py::arg("temperature"), py::arg("block_sites"), py::arg("c_width"),
        py::arg("eps_reference") = 1e-2, py::arg("drop_tol") = 1e-14,
        "Gibbs state as a convex combination of MPS, with the full audit.");

    m.def(
        "decompose_action",
        [](const Mps& psi, const SpinChainHamiltonian& h, int order, double cutoff) {
            const auto dec = decompose_action(psi, h, order, cutoff);
            py::dict d;
            d["energy"] = dec.energy;
            d["action_norm"] = dec.action_norm;
            d["tangent_residual"] = dec.tangent_residual;
            d["residual"] = dec.residual;
            d["metric_rank"] = dec.metric_rank;
            d["pair_rank"] = dec.pair_rank;
            d["h1"] = dec.h1;
            d["h2"] = dec.h2;
            return d;
        },
        py::arg("psi"), py::arg("h"), py::arg("order") = 2, py::arg("cutoff") = 1e-10,
        "Tangent-space decomposition of H|psi>; exact for nearest-neighbour H at order 2.");
    m.def(
        "tdvp_drift_step",
        [](const Mps& psi, const SpinChainHamiltonian& h, double dt, double cutoff) {
            const auto r = tdvp_drift_step(psi, h, dt, cutoff);
            return py::make_tuple(r.state, r.energy_change, r.norm_defect);
        },
        py::arg("psi"), py::arg("h"), py::arg("dt"), py::arg("cutoff") = 1e-10,
        "One midpoint TDVP step. Returns (state, energy_change, norm_defect).");
    m.def(
        "diffusion_check",
        [](const Mps& psi, const SpinChainHamiltonian& h, double cutoff) {
            const auto r = diffusion_matrix_check(psi, h, cutoff);
            py::dict d;
            d["eigenvalues"] = r.eigenvalues;
            d["min_eigenvalue"] = r.min_eigenvalue;
            d["max_eigenvalue"] = r.max_eigenvalue;
            d["frobenius"] = r.frobenius;
            d["positive_semidefinite"] = r.positive_semidefinite;
            return d;
        },
        py::arg("psi"), py::arg("h"), py::arg("cutoff") = 1e-10,
        "Spectrum of the candidate second-order diffusion matrix in real coordinates.");

    m.def(
        "quench",
        [](const MPSEnsemble& ensemble, const SpinChainHamiltonian& h, const MatrixXcd& u,
           int first_site, const std::vector<double>& times, double dt,
           const std::string& method, int dmax, double tol, int trotter_order, double cutoff) {
            QuenchConfig cfg;
            cfg.u = u;
            cfg.u_width = u.rows() == 4 ? 2 : 1;
            cfg.first_site = first_site;
            cfg.times = times;
            cfg.dt = dt;
            cfg.method = method_from_name(method);
            cfg.dmax = dmax == 0 ? kUnlimitedBond : dmax;
            cfg.tol = tol;
            cfg.trotter_order = trotter_order;
            cfg.cutoff = cutoff;
            const auto traj = quench_protocol(ensemble, h, cfg);
            py::list rows;
            for (const auto& r : traj.rows) {
                py::dict d;
                d["time"] = r.time;
                d["site"] = r.site;
                d["observable"] = r.observable;
                d["mean"] = r.mean;
                d["std_error"] = r.std_error;
                rows.append(std::move(d));
            }
            return rows;
        },
        py::arg("ensemble"), py::arg("h"), py::arg("u"), py::arg("first_site"),
        py::arg("times"), py::arg("dt") = 1e-3, py::arg("method") = "tdvp",
        py::arg("dmax") = 0, py::arg("tol") = 0.0, py::arg("trotter_order") = 2,
        py::arg("cutoff") = 1e-10,
        "Ensemble-averaged single-site Z trajectories after a local quench; "
        "dmax = 0 leaves tebd bonds uncapped.");
}
