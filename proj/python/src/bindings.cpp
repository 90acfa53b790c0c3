#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "bandlab/deloc.hpp"
#include "bandlab/ensemble.hpp"
#include "bandlab/experiment.hpp"
#include "bandlab/fluct.hpp"
#include "bandlab/resolvent.hpp"
#include "bandlab/tequation.hpp"
#include "bandlab/version.hpp"
#include "bandlab/walk.hpp"

namespace py = pybind11;
using namespace bandlab;

namespace {

SpectralParams make_params(const TorusShape& shape, const py::object& z) {
  if (py::isinstance<py::array>(z) || py::isinstance<py::list>(z)) {
    Eigen::VectorXcd zvec = z.cast<Eigen::VectorXcd>();
    Complex ref = zvec.size() ? zvec(0) : Complex(0, 1);
    return SpectralParams::general(shape, ref, std::move(zvec));
  }
  return SpectralParams::scalar(shape, z.cast<Complex>());
}

Eigen::VectorXcd make_mvec(const TorusShape& shape, const py::object& m) {
  if (py::isinstance<py::array>(m) || py::isinstance<py::list>(m))
    return m.cast<Eigen::VectorXcd>();
  return Eigen::VectorXcd::Constant(shape.size(), m.cast<Complex>());
}

}  // namespace

PYBIND11_MODULE(_bandlab, mod) {
  mod.doc() = "random band matrix laboratory (C++ core)";
  mod.attr("__version__") = kVersion;

  py::class_<TorusShape>(mod, "TorusShape")
      .def(py::init<int, int>(), py::arg("N"), py::arg("d"))
      .def_readonly("N", &TorusShape::side)
      .def_readonly("d", &TorusShape::dim)
      .def_property_readonly("size", &TorusShape::size)
      .def("__repr__", [](const TorusShape& s) {
        return "TorusShape(N=" + std::to_string(s.side) +
               ", d=" + std::to_string(s.dim) + ")";
      });

  mod.def("canonical_rep",
          [](const std::vector<int>& x, const TorusShape& shape) {
            return canonical_rep(std::span<const int>(x), shape).coords;
          });
  mod.def("torus_dist",
          [](const std::vector<int>& x, const std::vector<int>& y,
             const TorusShape& shape) {
            return dist(canonical_rep(std::span<const int>(x), shape),
                        canonical_rep(std::span<const int>(y), shape), shape);
          });
  mod.def("flatten", [](const std::vector<int>& x, const TorusShape& shape) {
    TorusPoint p{x};
    return flatten(p, shape);
  });
  mod.def("unflatten", [](std::int64_t i, const TorusShape& shape) {
    return unflatten(i, shape).coords;
  });

  py::class_<VarianceProfile>(mod, "VarianceProfile")
      .def_property_readonly("W", &VarianceProfile::band_width)
      .def_property_readonly("band_radius", &VarianceProfile::band_radius)
      .def_property_readonly("zeta", &VarianceProfile::zeta)
      .def("entry", &VarianceProfile::entry)
      .def("dense", &VarianceProfile::dense)
      .def("row_sums", &VarianceProfile::row_sums)
      .def("fourier_symbol", &VarianceProfile::fourier_symbol)
      .def("check", [](const VarianceProfile& p, double c_s, double C_s) {
        const ProfileReport r = check_profile(p, c_s, C_s);
        py::dict d;
        d["band_ok"] = r.band_ok;
        d["lower_ok"] = r.lower_ok;
        d["rowsum_slack"] = r.rowsum_slack;
        d["within_zeta"] = r.within_zeta;
        return d;
      });
  mod.def("uniform_profile", [](int N, int d, int W) {
    return VarianceProfile::uniform(TorusShape(N, d), W);
  });
  mod.def("general_profile",
          [](int N, int d, int W, const Eigen::MatrixXd& dense, double zeta) {
            return VarianceProfile::general(TorusShape(N, d), W, dense, zeta);
          },
          py::arg("N"), py::arg("d"), py::arg("W"), py::arg("dense"),
          py::arg("zeta") = 0.0);

  py::class_<BandSample>(mod, "BandSample")
      .def_readonly("H", &BandSample::H)
      .def_readonly("seed", &BandSample::seed)
      .def_property_readonly("shape", &BandSample::shape)
      .def_property_readonly("profile",
                             [](const BandSample& s) { return s.profile; });
  mod.def("sample_band",
          [](const VarianceProfile& profile, const std::string& dist,
             std::uint64_t seed) {
            return sample(profile, distribution_from_string(dist), seed);
          },
          py::arg("profile"), py::arg("dist") = "gaussian",
          py::arg("seed") = 1);
  mod.def("dump_matrix", &dump_matrix);

  mod.def("msc", &msc);
  mod.def("solve_M",
          [](const VarianceProfile& profile, const py::object& z, double tol,
             int max_iter) {
            const auto sol =
                solve_M(profile, make_params(profile.shape(), z), tol, max_iter);
            return py::make_tuple(sol.M, sol.residual, sol.iterations);
          },
          py::arg("profile"), py::arg("z"), py::arg("tol") = 1e-12,
          py::arg("max_iter") = 10000);
  mod.def("stability_inverse",
          [](const Eigen::VectorXcd& M, const VarianceProfile& profile) {
            const auto rep = stability_inverse(M, profile);
            py::dict d;
            d["inverse"] = rep.inverse;
            d["norm_linf"] = rep.norm_linf;
            d["contraction"] = rep.contraction;
            d["near_max"] = rep.near_max;
            d["far_max"] = rep.far_max;
            d["far_radius"] = rep.far_radius;
            return d;
          });
  mod.def("theta_kernel",
          [](const VarianceProfile& profile, Complex m, const std::string& mode) {
            const auto theta = theta_kernel(
                profile, m, mode == "dense" ? ThetaMode::kDense : ThetaMode::kFft);
            return theta.matrix();
          },
          py::arg("profile"), py::arg("m"), py::arg("mode") = "fft");

  py::class_<Resolvent>(mod, "Resolvent")
      .def_readonly("G", &Resolvent::G)
      .def_readonly("minor_set", &Resolvent::minor_set);
  mod.def("resolvent", [](const BandSample& s, const py::object& z) {
    return resolvent(s, make_params(s.shape(), z));
  });
  mod.def("minor_resolvent",
          [](const BandSample& s, const py::object& z,
             std::vector<std::int64_t> removed) {
            return minor_resolvent(s, make_params(s.shape(), z),
                                   std::move(removed));
          });
  mod.def("minor_from", &minor_from);
  mod.def("resolvent_defect", &resolvent_defect);
  mod.def("identity_residuals",
          [](const BandSample& s, const py::object& z, std::int64_t i,
             std::int64_t j, std::int64_t k) {
            const auto r =
                identity_residuals(s, make_params(s.shape(), z), i, j, k);
            py::dict d;
            d["gij_minor"] = r.gij_minor;
            d["diag_inverse"] = r.diag_inverse;
            d["schur_diag"] = r.schur_diag;
            d["row_expansion"] = r.row_expansion;
            d["skipped"] = r.skipped;
            return d;
          });
  mod.def("ward_residual", [](const Resolvent& r, std::int64_t y) {
    const auto w = ward_residual(r, y);
    return py::make_tuple(w.scalar_ward ? py::cast(*w.scalar_ward)
                                        : py::none(),
                          w.generalized);
  });
  mod.def("triple_norm", &triple_norm);
  mod.def("psi_field",
          [](const Resolvent& r, const VarianceProfile& profile, double tau) {
            return psi_field(r, profile, tau).psi;
          });
  mod.def("zcal_variables",
          [](const BandSample& s, const Resolvent& full, const py::object& m) {
            const auto z = zcal_variables(s, full, make_mvec(s.shape(), m));
            return py::make_tuple(z.z, z.cming_defect);
          });
  mod.def("empirical_controls",
          [](const Resolvent& r, const Eigen::VectorXcd& M) {
            const auto c = empirical_controls(r, M);
            return py::make_tuple(c.phi, c.gamma);
          });
  mod.def("max_deviation",
          [](const Eigen::MatrixXcd& G, const py::object& m) {
            return m.is_none()
                       ? max_deviation(G, Complex(0, 0))
                       : max_deviation(G, m.cast<Complex>());
          });

  mod.def("t_matrix", &t_matrix);
  mod.def("t_column", &t_column);
  mod.def("t_equation_residual", &t_equation_residual);
  mod.def("t_zero_column", &t_zero_column);
  mod.def("profile_bound_check",
          [](const Eigen::MatrixXd& kernel, int N, int d, int W, double eta) {
            const auto fit = profile_bound_check(kernel, TorusShape(N, d), W, eta);
            py::dict out;
            out["fitted_C"] = fit.fitted_C;
            out["c1"] = fit.c1;
            out["c2"] = fit.c2;
            py::list rows;
            for (const auto& r : fit.rows)
              rows.append(py::make_tuple(r.distance, r.envelope, r.bound,
                                         r.ratio));
            out["rows"] = rows;
            return out;
          });

  mod.def("fluct_stat",
          [](const Resolvent& r, const py::object& m,
             const Eigen::VectorXd& t_col, const Eigen::VectorXd& b,
             std::int64_t y_star, int W, double eta) {
            const auto M = make_mvec(r.params.shape, m);
            const auto stat =
                fluct_stat(r, M, t_col, b, y_star,
                           ControlParams::theoretical(W, r.params.shape.dim, eta));
            py::dict d;
            d["value"] = stat.value;
            d["bound_new"] = stat.bound_new;
            d["bound_old"] = stat.bound_old;
            return d;
          });
  mod.def("split_pq",
          [](const BandSample& s, const Resolvent& full, const py::object& m,
             const Eigen::VectorXd& t_col, const Eigen::VectorXd& b,
             std::int64_t y_star, int n_resample) {
            const auto pq = split_pq(s, full, make_mvec(s.shape(), m), t_col,
                                     b, y_star, n_resample);
            return py::make_tuple(pq.p_part, pq.q_part, pq.f_offdiag);
          });
  mod.def("conditional_sqmod_mc", &conditional_sqmod_mc, py::arg("sample"),
          py::arg("full"), py::arg("x"), py::arg("y_star"),
          py::arg("n_resample"), py::arg("first_index") = 0);

  mod.def("eigendecompose",
          [](const BandSample& s) {
            const auto spec = eigendecompose(s);
            return py::make_tuple(spec.eigenvalues, spec.eigenvectors);
          });
  mod.def("localization_fraction",
          [](const Eigen::VectorXd& evals, const Eigen::MatrixXd& evecs,
             int N, int d, double eps, double kappa, int l) {
            SpectralData spec{evals, evecs};
            return localization_fraction(spec, TorusShape(N, d), eps, kappa, l);
          });
  mod.def("sup_norm_stat",
          [](const Eigen::VectorXd& evals, const Eigen::MatrixXd& evecs,
             double kappa) -> py::object {
            SpectralData spec{evals, evecs};
            const auto v = sup_norm_stat(spec, kappa);
            return v ? py::cast(*v) : py::none();
          });
  mod.def("mass_profile", &mass_profile);
  mod.def("local_law_check", &local_law_check, py::arg("resolvent"),
          py::arg("m"), py::arg("W"), py::arg("delta") = 0.1);
  mod.def("phi2_fixed_point", [](int W, int d, double delta) {
    const auto fp = phi2_fixed_point(W, d, delta);
    return py::make_tuple(fp.value, fp.closed_form, fp.steps);
  });

  py::class_<WalkStep>(mod, "WalkStep")
      .def_property_readonly("radius",
                             [](const WalkStep& s) { return s.radius; })
      .def("covariance", &WalkStep::covariance);
  mod.def("walk_uniform", &WalkStep::uniform, py::arg("W"), py::arg("d"));
  mod.def("walk_from_profile", &WalkStep::from_profile);
  mod.def("s_power", [](const WalkStep& step, int k, int N) {
    return s_power(step, k, TorusShape(N, step.dim));
  });
  mod.def("clt_compare", [](const WalkStep& step, int n, int N) {
    const auto r = clt_compare(step, n, TorusShape(N, step.dim));
    py::dict d;
    d["max_abs_err"] = r.max_abs_err;
    d["center_rel_err"] = r.center_rel_err;
    d["gaussian_peak"] = r.gaussian_peak;
    d["wraparound_ok"] = r.wraparound_ok;
    return d;
  });
  mod.def("theta_tail_sum",
          [](const WalkStep& step, Complex m, double eta, int N) {
            const auto r = theta_tail_sum(step, m, eta, TorusShape(N, step.dim));
            py::dict d;
            d["row"] = r.row;
            d["K"] = r.K;
            d["truncation_bound"] = r.truncation_bound;
            return d;
          });

  mod.def("default_config_json", [](const std::string& name) {
    return default_config(name).dump();
  });
  mod.def("run_experiment_json", [](const std::string& config) {
    const auto result = run_experiment(nlohmann::json::parse(config));
    return result.manifest.dump();
  });
  mod.def("summarize_json", [](const std::vector<std::string>& paths) {
    return summarize(paths).dump();
  });

  mod.attr("__all__") = py::make_tuple(
      "TorusShape", "canonical_rep", "torus_dist", "flatten", "unflatten",
      "VarianceProfile", "uniform_profile", "general_profile", "BandSample",
      "sample_band", "dump_matrix", "msc", "solve_M", "stability_inverse",
      "theta_kernel", "Resolvent", "resolvent", "minor_resolvent",
      "minor_from", "resolvent_defect", "identity_residuals", "ward_residual",
      "triple_norm", "psi_field", "zcal_variables", "empirical_controls",
      "max_deviation", "t_matrix", "t_column", "t_equation_residual",
      "t_zero_column", "profile_bound_check", "fluct_stat", "split_pq",
      "conditional_sqmod_mc", "eigendecompose", "localization_fraction",
      "sup_norm_stat", "mass_profile", "local_law_check", "phi2_fixed_point",
      "WalkStep", "walk_uniform", "walk_from_profile", "s_power",
      "clt_compare", "theta_tail_sum");
}
