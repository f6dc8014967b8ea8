#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "misfit/datasets.hpp"
#include "misfit/errors.hpp"
#include "misfit/gaussian.hpp"
#include "misfit/model_io.hpp"
#include "misfit/spline.hpp"
#include "misfit/train.hpp"
#include "misfit/uncertainty.hpp"

namespace py = pybind11;
using namespace misfit;

namespace {

py::array_t<double> to_array(const std::vector<double>& v,
                             std::size_t rows, std::size_t cols) {
  if (cols == 1) {
    py::array_t<double> a(rows);
    std::copy(v.begin(), v.end(), a.mutable_data());
    return a;
  }
  py::array_t<double> a({rows, cols});
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

std::vector<double> y_from_obj(const py::object& y, int y_dim) {
  std::vector<double> out;
  if (py::isinstance<py::float_>(y) || py::isinstance<py::int_>(y)) {
    out.push_back(y.cast<double>());
  } else {
    out = y.cast<std::vector<double>>();
  }
  if (static_cast<int>(out.size()) != y_dim)
    throw UserError("y has " + std::to_string(out.size()) +
                    " entries, expected " + std::to_string(y_dim));
  return out;
}

RqSpline<double> spline_from_raw(const std::vector<double>& raw, int bins,
                                 double bound) {
  SplineConfig cfg;
  cfg.bins = bins;
  cfg.bound = bound;
  if (static_cast<int>(raw.size()) != cfg.param_count())
    throw UserError("raw spline params must have 3K-1 entries");
  return make_spline(raw.data(), cfg);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "C++ core: datasets, likelihood heads, flows, training and "
            "uncertainty measures";

  py::register_exception<UserError>(m, "UserError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_IOError);
  py::register_exception<DivergenceError>(m, "DivergenceError",
                                          PyExc_RuntimeError);

  m.def(
      "gen_dataset",
      [](const std::string& name, std::size_t n, std::uint64_t seed) {
        const Dataset ds = generate(dataset_from_string(name), n, seed);
        py::dict d;
        d["x"] = to_array(ds.x, ds.n, 1);
        d["y"] = to_array(ds.y, ds.n, ds.y_dim);
        d["name"] = name;
        d["seed"] = seed;
        return d;
      },
      py::arg("name"), py::arg("n"), py::arg("seed") = 1,
      "Generate a dataset; returns a dict with x and y arrays.");

  m.def("ground_truth_log_pdf",
        [](const std::string& name, double x, const py::object& y) {
          const GroundTruth gt = ground_truth(dataset_from_string(name));
          const auto yv = y_from_obj(y, gt.y_dim());
          return gt.log_pdf(x, yv.data());
        },
        py::arg("name"), py::arg("x"), py::arg("y"));
  m.def("ground_truth_mean", [](const std::string& name, double x) {
    const GroundTruth gt = ground_truth(dataset_from_string(name));
    std::vector<double> mu(gt.y_dim());
    gt.mean(x, mu.data());
    return mu;
  });
  m.def("ground_truth_cov", [](const std::string& name, double x) {
    const GroundTruth gt = ground_truth(dataset_from_string(name));
    const int d = gt.y_dim();
    std::vector<double> c(d * d);
    gt.cov(x, c.data());
    return to_array(c, d, d);
  });
  m.def("mixture_variance", [](const std::string& name) {
    return ground_truth(dataset_from_string(name)).mixture_variance();
  });

  m.def("nll_glc_1d", &nll_glc_1d<double>, py::arg("mu"), py::arg("y"),
        py::arg("sigma"));
  m.def("nll_gl_1d", &nll_gl_1d<double>, py::arg("mu"), py::arg("log_sigma"),
        py::arg("y"));
  m.def("nll_glc_2d",
        [](double mu1, double mu2, std::vector<double> y, double sigma) {
          if (y.size() != 2) throw UserError("y must have 2 entries");
          return nll_glc_2d(mu1, mu2, y.data(), sigma);
        });
  m.def("nll_gl_2d", [](std::vector<double> theta, std::vector<double> y) {
    if (theta.size() != 5 || y.size() != 2)
      throw UserError("theta must have 5 entries and y 2");
    return nll_gl_2d(theta.data(), y.data());
  });
  m.def("kl_meanfield_to_prior",
        [](std::vector<double> mean, std::vector<double> raw_scale,
           double prior_sigma) {
          if (mean.size() != raw_scale.size())
            throw UserError("mean and raw_scale sizes differ");
          return kl_meanfield_to_prior({std::move(mean),
                                        std::move(raw_scale)},
                                       {prior_sigma});
        },
        py::arg("mean"), py::arg("raw_scale"), py::arg("prior_sigma") = 1.0);
  m.def("gaussian_entropy", &gaussian_entropy, py::arg("variance"));

  m.def("spline_forward",
        [](double z, std::vector<double> raw, int bins, double bound) {
          const auto sp = spline_from_raw(raw, bins, bound);
          return spline_fwd(sp, z);
        },
        py::arg("z"), py::arg("raw"), py::arg("bins") = 8,
        py::arg("bound") = 3.0,
        "Returns (y, log dy/dz) of the rational-quadratic spline.");
  m.def("spline_inverse",
        [](double y, std::vector<double> raw, int bins, double bound) {
          const auto sp = spline_from_raw(raw, bins, bound);
          return spline_inv(sp, y);
        },
        py::arg("y"), py::arg("raw"), py::arg("bins") = 8,
        py::arg("bound") = 3.0);

  py::class_<Model>(m, "Model")
      .def_property_readonly("y_dim", &Model::y_dim)
      .def_property_readonly("config_json",
                             [](const Model& m_) {
                               return config_to_json_text(m_.config);
                             })
      .def_property_readonly("loss_curve",
                             [](const Model& m_) { return m_.loss_curve; })
      .def("logpdf",
           [](const Model& m_, double x, const py::object& y) {
             if (m_.config.bayes)
               throw UserError(
                   "logpdf uses the deterministic weights; for Bayesian "
                   "models evaluate() averages posterior draws");
             const auto yv = y_from_obj(y, m_.y_dim());
             return m_.logpdf(x, yv.data(), m_.weights.data());
           })
      .def("theta",
           [](const Model& m_, double x) {
             if (m_.config.bayes)
               throw UserError("theta needs deterministic weights");
             return m_.theta(x, m_.weights.data());
           })
      .def("sample",
           [](const Model& m_, double x, std::size_t n, std::uint64_t seed) {
             const auto draws = m_.weight_draws(1);
             const ModelSlice s = m_.slice(x, draws[0].data());
             CounterRng rng(seed, streams::kSampling);
             const int yd = m_.y_dim();
             std::vector<double> out(n * yd);
             for (std::size_t i = 0; i < n; ++i) {
               double z[2] = {rng.normal(), 0.0};
               if (yd == 2) z[1] = rng.normal();
               s.sample(z, out.data() + i * yd);
             }
             return to_array(out, n, yd);
           },
           py::arg("x"), py::arg("n"), py::arg("seed") = 1)
      .def("evaluate",
           [](const Model& m_) {
             const EvalReport rep = evaluate_default(m_);
             py::dict d;
             d["test_nll"] = rep.test_nll;
             if (rep.has_mse)
               d["test_mse"] = rep.test_mse;
             else
               d["test_mse"] = py::none();
             return d;
           })
      .def("save", [](const Model& m_, const std::string& path) {
        save_model(m_, path);
      });

  m.def("default_config", []() {
    TrainConfig cfg;
    cfg.dataset = DatasetName::unimodal1d;
    cfg.model_class = ModelClass::glc;
    return config_to_json_text(cfg);
  });
  m.def(
      "train",
      [](const std::string& config_json) {
        return train(config_from_json_text(config_json));
      },
      py::arg("config_json"),
      "Train from a run-config JSON string; returns a Model.");
  m.def("load_model", &load_model, py::arg("path"));

  m.def(
      "uncertainty_curve",
      [](const Model& model, double lo, double hi, std::size_t count,
         std::size_t draws) {
        std::vector<double> grid(count);
        for (std::size_t i = 0; i < count; ++i)
          grid[i] = count == 1 ? lo
                               : lo + (hi - lo) * static_cast<double>(i) /
                                          static_cast<double>(count - 1);
        const auto ens = make_ensemble(model, draws);
        const auto c = uncertainty_curve(ens, grid, model.config.seed);
        py::dict d;
        d["x"] = to_array(c.x, c.x.size(), 1);
        d["H"] = to_array(c.entropy, c.entropy.size(), 1);
        d["U_V"] = to_array(c.u_v, c.u_v.size(), 1);
        d["U_W"] = to_array(c.u_w, c.u_w.size(), 1);
        std::vector<double> mask(c.in_dist.begin(), c.in_dist.end());
        d["in_dist"] = to_array(mask, mask.size(), 1);
        d["model_class"] = c.model_class;
        return d;
      },
      py::arg("model"), py::arg("lo") = -6.0, py::arg("hi") = 6.0,
      py::arg("count") = 241, py::arg("draws") = 0);

  m.def(
      "reproduce_table",
      [](const std::string& id, int seeds) {
        const TableResult t = reproduce_table(id, seeds);
        py::list rows;
        for (const auto& r : t.rows) {
          py::dict d;
          d["model"] = r.model;
          d["nll_mean"] = r.nll_mean;
          d["nll_sem"] = r.nll_sem;
          if (r.has_mse) {
            d["mse_mean"] = r.mse_mean;
            d["mse_sem"] = r.mse_sem;
          } else {
            d["mse_mean"] = py::none();
            d["mse_sem"] = py::none();
          }
          rows.append(d);
        }
        return rows;
      },
      py::arg("id"), py::arg("seeds") = 10);
}
