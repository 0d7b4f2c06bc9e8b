// Python bindings for the core simulation and analysis operations.

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "spinsim/seqlang.hpp"
#include "spinsim/sweep.hpp"

namespace py = pybind11;
using namespace spinsim;

namespace {

Axis axis_from(const std::string& name) {
  if (name == "x") return Axis::X;
  if (name == "y") return Axis::Y;
  if (name == "z") return Axis::Z;
  if (name == "+") return Axis::Plus;
  if (name == "-") return Axis::Minus;
  throw std::invalid_argument("axis must be one of x, y, z, +, -");
}

}  // namespace

PYBIND11_MODULE(_spinsim, m) {
  m.doc() = "four-spin singlet-state simulator";

  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

  py::class_<DipolarPair>(m, "DipolarPair")
      .def(py::init<>())
      .def_readwrite("i", &DipolarPair::i)
      .def_readwrite("j", &DipolarPair::j)
      .def_readwrite("distance_m", &DipolarPair::distance_m);

  py::class_<SpinSystem>(m, "SpinSystem")
      .def_readonly("n_spins", &SpinSystem::n_spins)
      .def_readonly("offsets_hz", &SpinSystem::offsets_hz)
      .def_readonly("j_hz", &SpinSystem::j_hz)
      .def_readonly("dipolar_pairs", &SpinSystem::dipolar_pairs)
      .def("dim", &SpinSystem::dim);

  m.def("make_spin_system", &make_spin_system, py::arg("n_spins"),
        py::arg("offsets_hz"), py::arg("j_hz"),
        py::arg("pairs") = std::vector<DipolarPair>{});

  py::class_<DensityState>(m, "DensityState")
      .def_readwrite("rho", &DensityState::rho)
      .def_readwrite("label", &DensityState::label)
      .def("check_invariants", &DensityState::check_invariants,
           py::arg("require_positive") = true);

  m.def("single_spin_operator",
        [](const SpinSystem& s, int spin, const std::string& axis) {
          return single_spin_operator(s, spin, axis_from(axis));
        },
        py::arg("system"), py::arg("spin"), py::arg("axis"));
  m.def("coherent_hamiltonian", &coherent_hamiltonian);
  m.def("dipolar_tensor_components",
        [](const SpinSystem& s, int i, int j) {
          const auto t = dipolar_tensor_components(s, i, j);
          return std::vector<Matrix>(t.begin(), t.end());
        });
  m.def("singlet_projector", &singlet_projector);
  m.def("singlet_pair_state", &singlet_pair_state, py::arg("system"),
        py::arg("pair_a"), py::arg("pair_b"), py::arg("epsilon"));
  m.def("thermal_state", &thermal_state);

  py::class_<RelaxationModel>(m, "RelaxationModel")
      .def(py::init<>())
      .def_readwrite("tau_c", &RelaxationModel::tau_c)
      .def_readwrite("random_field_rate", &RelaxationModel::random_field_rate)
      .def_readwrite("larmor_rad_s", &RelaxationModel::larmor_rad_s);

  py::class_<BindingModel>(m, "BindingModel")
      .def(py::init<>())
      .def_readwrite("bound_fraction", &BindingModel::bound_fraction)
      .def_readwrite("bound_extra_random_field_rate",
                     &BindingModel::bound_extra_random_field_rate)
      .def_readwrite("bound_tau_c", &BindingModel::bound_tau_c);

  py::class_<Liouvillian>(m, "Liouvillian")
      .def(py::init<>())
      .def_readwrite("hilbert_dim", &Liouvillian::hilbert_dim)
      .def_readwrite("generator", &Liouvillian::generator);

  m.def("dipolar_coupling_constant", &dipolar_coupling_constant);
  m.def("spectral_density", &spectral_density);
  m.def("dipolar_redfield_superoperator", &dipolar_redfield_superoperator);
  m.def("random_field_superoperator", &random_field_superoperator);
  m.def("relaxation_superoperator", &relaxation_superoperator);
  m.def("assemble_liouvillian", &assemble_liouvillian);
  m.def("exchange_averaged_superoperator", &exchange_averaged_superoperator);

  py::class_<DfsBasis>(m, "DfsBasis")
      .def_readonly("dimension", &DfsBasis::dimension)
      .def_readonly("operators", &DfsBasis::operators)
      .def_readonly("gap", &DfsBasis::gap);
  m.def("decoherence_free_subspace", &decoherence_free_subspace,
        py::arg("relaxation_generator"), py::arg("tol") = 1e-10);

  py::class_<TimingSet>(m, "TimingSet")
      .def(py::init<>())
      .def_readwrite("t1", &TimingSet::t1)
      .def_readwrite("t2", &TimingSet::t2)
      .def_readwrite("t3", &TimingSet::t3);
  m.def("compute_m2s_timings", &compute_m2s_timings);

  py::class_<TimingRanges>(m, "TimingRanges")
      .def(py::init([](double t1_lo, double t1_hi, double t2_lo, double t2_hi,
                       double t3_lo, double t3_hi) {
        return TimingRanges{t1_lo, t1_hi, t2_lo, t2_hi, t3_lo, t3_hi};
      }))
      .def_readwrite("t1_lo", &TimingRanges::t1_lo)
      .def_readwrite("t1_hi", &TimingRanges::t1_hi)
      .def_readwrite("t2_lo", &TimingRanges::t2_lo)
      .def_readwrite("t2_hi", &TimingRanges::t2_hi)
      .def_readwrite("t3_lo", &TimingRanges::t3_lo)
      .def_readwrite("t3_hi", &TimingRanges::t3_hi);

  py::class_<TimingOptimum>(m, "TimingOptimum")
      .def_readonly("timings", &TimingOptimum::timings)
      .def_readonly("objective", &TimingOptimum::objective);
  m.def("preparation_objective", &preparation_objective, py::arg("system"),
        py::arg("timings"), py::arg("polarization") = 1e-2);
  m.def("optimize_timings", &optimize_timings, py::arg("system"),
        py::arg("ranges"), py::arg("coarse_points") = 10);

  m.def("singlet_locking_program", &singlet_locking_program);
  m.def("inversion_recovery_program", &inversion_recovery_program);

  py::class_<SequenceProgram>(m, "SequenceProgram")
      .def_readonly("name", &SequenceProgram::name)
      .def_readonly("parameters", &SequenceProgram::parameters)
      .def("n_events",
           [](const SequenceProgram& p) { return p.events.size(); });

  py::class_<Engine>(m, "Engine")
      .def_static("coherent", &Engine::coherent)
      .def_static("with_relaxation", &Engine::with_relaxation,
                  py::arg("system"), py::arg("relaxation_superop"),
                  py::arg("equilibrium") = std::optional<Matrix>{});

  py::class_<RunResult>(m, "RunResult")
      .def_readonly("sample_times", &RunResult::sample_times)
      .def_readonly("samples", &RunResult::samples)
      .def_readonly("final_state", &RunResult::final_state);
  m.def("run_sequence", &run_sequence);

  py::class_<DecayCurve>(m, "DecayCurve")
      .def(py::init<>())
      .def_readwrite("times", &DecayCurve::times)
      .def_readwrite("amplitudes", &DecayCurve::amplitudes)
      .def_readwrite("sigma", &DecayCurve::sigma)
      .def_readwrite("metadata", &DecayCurve::metadata);

  py::class_<FitResult>(m, "FitResult")
      .def_readonly("lifetime", &FitResult::lifetime)
      .def_readonly("lifetime_stderr", &FitResult::lifetime_stderr)
      .def_readonly("amplitude", &FitResult::amplitude)
      .def_readonly("offset", &FitResult::offset)
      .def_readonly("model", &FitResult::model)
      .def_readonly("rms_residual", &FitResult::rms_residual);
  m.def("fit_exponential", &fit_exponential);
  m.def("fit_inversion_recovery", &fit_inversion_recovery);
  m.def("fit_buildup", &fit_buildup);

  py::class_<EigenmodeRate>(m, "EigenmodeRate")
      .def_readonly("rate", &EigenmodeRate::rate)
      .def_readonly("overlap", &EigenmodeRate::overlap)
      .def_readonly("ambiguous", &EigenmodeRate::ambiguous);
  m.def("eigenmode_rate", &eigenmode_rate);

  m.def("contrast", &contrast);
  m.def("thermal_polarization", &thermal_polarization);
  m.def("enhancement_factor", &enhancement_factor);

  py::class_<CalibrationTargets>(m, "CalibrationTargets")
      .def(py::init([](double t1, double ts) {
        return CalibrationTargets{t1, ts};
      }))
      .def_readwrite("t1", &CalibrationTargets::t1)
      .def_readwrite("ts", &CalibrationTargets::ts);

  py::class_<CalibrationResult>(m, "CalibrationResult")
      .def_readonly("model", &CalibrationResult::model)
      .def_readonly("achieved_t1", &CalibrationResult::achieved_t1)
      .def_readonly("achieved_ts", &CalibrationResult::achieved_ts);
  m.def("calibrate_relaxation",
        [](const SpinSystem& s, double t1, double ts, double larmor_rad_s) {
          return calibrate_relaxation(s, {t1, ts}, larmor_rad_s);
        },
        py::arg("system"), py::arg("t1"), py::arg("ts"),
        py::arg("larmor_rad_s"));

  py::class_<BindingCalibrationResult>(m, "BindingCalibrationResult")
      .def_readonly("binding", &BindingCalibrationResult::binding)
      .def_readonly("achieved_t1", &BindingCalibrationResult::achieved_t1)
      .def_readonly("achieved_ts", &BindingCalibrationResult::achieved_ts);
  m.def("calibrate_binding",
        [](const SpinSystem& s, const RelaxationModel& free_model, double t1,
           double ts, double fraction) {
          return calibrate_binding(s, free_model, {t1, ts}, fraction);
        },
        py::arg("system"), py::arg("free_model"), py::arg("t1"), py::arg("ts"),
        py::arg("bound_fraction") = 0.3);

  m.def("simulated_lifetimes", &simulated_lifetimes);

  py::class_<Scenario>(m, "Scenario")
      .def_readwrite("name", &Scenario::name)
      .def_readwrite("temperature_k", &Scenario::temperature_k)
      .def_readwrite("field_t", &Scenario::field_t)
      .def_readwrite("polarization", &Scenario::polarization);

  py::class_<SystemFile>(m, "SystemFile")
      .def_readonly("system", &SystemFile::system)
      .def_readonly("relaxation", &SystemFile::relaxation)
      .def_readonly("binding", &SystemFile::binding)
      .def_readonly("scenario", &SystemFile::scenario);
  m.def("parse_system", &parse_system);
  m.def("serialize_system", &serialize_system);
  m.def("parse_sequence", &parse_sequence, py::arg("text"),
        py::arg("parameters") = std::map<std::string, double>{});
  m.def("serialize_sequence", &serialize_sequence);
  m.def("read_curve_file", &read_curve_file);
  m.def("write_curve_file", &write_curve_file);

  py::enum_<SweepVariable>(m, "SweepVariable")
      .value("LockDuration", SweepVariable::LockDuration)
      .value("IrDelay", SweepVariable::IrDelay);

  py::class_<SweepOptions>(m, "SweepOptions")
      .def(py::init<>())
      .def_readwrite("variable", &SweepOptions::variable)
      .def_readwrite("grid", &SweepOptions::grid)
      .def_readwrite("timings", &SweepOptions::timings)
      .def_readwrite("lock_amplitude_hz", &SweepOptions::lock_amplitude_hz)
      .def_readwrite("polarization", &SweepOptions::polarization);
  m.def("sweep_simulate", &sweep_simulate);

  m.attr("gamma_proton") = constants::gamma_proton;
}
