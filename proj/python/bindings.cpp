#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cbdbp/complexity.hpp"
#include "cbdbp/dbp.hpp"
#include "cbdbp/harness.hpp"

namespace py = pybind11;
using namespace cbdbp;

namespace {

using CArray = py::array_t<Complex, py::array::c_style | py::array::forcecast>;

CVec to_cvec(const CArray& a) {
  if (a.ndim() != 1) throw std::invalid_argument("expected a 1-D array");
  return CVec(a.data(), a.data() + a.size());
}

py::tuple to_arrays(const DualPolWaveform& w) {
  return py::make_tuple(CArray(static_cast<py::ssize_t>(w.x.size()), w.x.data()), CArray(static_cast<py::ssize_t>(w.y.size()), w.y.data()));
}

ExperimentConfig config_from(const py::object& overrides, const std::string& preset_name) {
  ExperimentConfig base = preset(preset_name);
  if (overrides.is_none()) return base;
  const auto text = py::module_::import("json").attr("dumps")(overrides).cast<std::string>();
  return parse_config(text, base);
}

py::dict row_dict(const ResultRow& r) {
  py::dict d;
  d["receiver_kind"] = r.receiver_kind;
  d["N_st"] = r.num_steps;
  d["N_sb"] = r.num_subbands;
  d["rho"] = r.rho;
  d["power_dbm"] = r.power_dbm;
  d["snr_db"] = r.snr_db;
  d["rms_per_2d"] = r.rms_per_2d;
  d["seed"] = r.seed;
  d["note"] = r.note;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Coupled-band ESSFM digital backpropagation";

  m.def("beta2_from_D", &beta2_from_D, py::arg("dispersion_ps_per_nm_km"), py::arg("wavelength_nm"));
  m.def("default_overlap", &default_overlap, py::arg("beta2_total_ps2"), py::arg("sample_rate"), py::arg("num_subbands"));
  m.def(
      "rms_per_2d",
      [](std::int64_t num, std::int64_t den, std::size_t block, std::size_t overlap, int nst, int nsb) {
        return rms_per_2d(Rational(num, den), block, overlap, nst, nsb);
      },
      py::arg("n_num"), py::arg("n_den"), py::arg("N"), py::arg("N_ov"), py::arg("N_st"), py::arg("N_sb"));

  m.def(
      "preset", [](const std::string& name) { return py::module_::import("json").attr("loads")(to_json(preset(name))); }, py::arg("name"));
  m.def(
      "config",
      [](const py::object& overrides, const std::string& name) {
        const auto cfg = config_from(overrides, name);
        cfg.validate();
        return py::module_::import("json").attr("loads")(to_json(cfg));
      },
      py::arg("overrides") = py::none(), py::arg("preset") = "desk");
  m.def(
      "simulate",
      [](const py::object& overrides, const std::string& name) {
        const auto cfg = config_from(overrides, name);
        std::vector<ResultRow> rows;
        {
          py::gil_scoped_release release;
          rows = run_simulate(cfg);
        }
        py::list out;
        for (const auto& r : rows) out.append(row_dict(r));
        return out;
      },
      py::arg("overrides") = py::none(), py::arg("preset") = "desk");

  m.def(
      "edc",
      [](const CArray& x, const CArray& y, double sample_rate, double beta2_total_ps2, std::size_t block_length, std::size_t overlap) {
        BlockingConfig b;
        b.block_length = block_length;
        b.overlap = overlap;
        return to_arrays(edc(DualPolWaveform(to_cvec(x), to_cvec(y), sample_rate), beta2_total_ps2, b));
      },
      py::arg("x"), py::arg("y"), py::arg("sample_rate"), py::arg("beta2_total_ps2"), py::arg("block_length"), py::arg("overlap"));
  m.def(
      "cb_essfm",
      [](const CArray& x, const CArray& y, double sample_rate, int num_steps, int num_subbands, double rho, double length_km,
         std::size_t block_length, std::size_t overlap, int intra_half_width, int inter_half_width, const std::vector<double>& taps) {
        DbpConfig cfg;
        cfg.num_steps = num_steps;
        cfg.num_subbands = num_subbands;
        cfg.splitting_ratio = rho;
        cfg.total_length_km = length_km;
        cfg.blocking.block_length = block_length;
        cfg.blocking.overlap = overlap;
        cfg.coefficients = NlprCoefficients(num_subbands, intra_half_width, inter_half_width);
        if (!taps.empty()) cfg.coefficients.set_parameters(RVec(taps.begin(), taps.end()));
        return to_arrays(cb_essfm(DualPolWaveform(to_cvec(x), to_cvec(y), sample_rate), cfg));
      },
      py::arg("x"), py::arg("y"), py::arg("sample_rate"), py::arg("num_steps"), py::arg("num_subbands"), py::arg("rho"),
      py::arg("length_km"), py::arg("block_length"), py::arg("overlap"), py::arg("intra_half_width") = 16, py::arg("inter_half_width") = 16,
      py::arg("taps") = std::vector<double>{});
}
