#include "misfit/model.hpp"

#include <cmath>

#include "misfit/errors.hpp"
#include "misfit/gaussian.hpp"

namespace misfit {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

ModelClass model_class_from_string(const std::string& s) {
  if (s == "glc") return ModelClass::glc;
  if (s == "gl") return ModelClass::gl;
  if (s == "fl") return ModelClass::fl;
  throw UserError("unknown model class '" + s + "'; valid: glc, gl, fl");
}

std::string to_string(ModelClass c) {
  switch (c) {
    case ModelClass::glc: return "glc";
    case ModelClass::gl: return "gl";
    case ModelClass::fl: return "fl";
  }
  return "?";
}

std::size_t TrainConfig::resolved_n() const {
  if (n > 0) return n;
  switch (dataset) {
    case DatasetName::unimodal1d: return 20;
    case DatasetName::bimodal1d: return 1000;
    case DatasetName::bimodal2d: return 512;
  }
  return 0;
}

long TrainConfig::resolved_steps() const {
  if (steps > 0) return steps;
  return dataset == DatasetName::bimodal2d ? 5000 : 3000;
}

std::size_t TrainConfig::resolved_test_n() const {
  if (test_n > 0) return test_n;
  return dataset == DatasetName::bimodal2d ? 2000 : 50;
}

double TrainConfig::resolved_sigma() const {
  if (glc_sigma > 0.0) return glc_sigma;
  return default_glc_sigma(dataset, matched_variance);
}

int TrainConfig::theta_dim() const {
  const int d = y_dim();
  switch (model_class) {
    case ModelClass::glc: return d;
    case ModelClass::gl: return d == 1 ? 2 : 5;
    case ModelClass::fl:
      return d == 1 ? flow1d().spline.param_count() : flow2d().hyper_out_dim();
  }
  return 1;
}

MlpSpec TrainConfig::network() const {
  MlpSpec s;
  s.input_dim = 1;
  s.hidden = hidden;
  s.output_dim = theta_dim();
  s.activation = activation;
  return s;
}

FlowConfig1D TrainConfig::flow1d() const {
  FlowConfig1D f;
  f.spline.bins = flow_bins;
  f.spline.bound = flow_bound;
  return f;
}

FlowConfig2D TrainConfig::flow2d() const {
  FlowConfig2D f;
  f.spline.bins = flow_bins;
  f.spline.bound = flow_bound;
  f.layers = flow_layers;
  f.cond_hidden = flow_cond_hidden;
  return f;
}

void TrainConfig::validate() const {
  if (resolved_n() == 0) throw UserError("config: n must be >= 1");
  if (resolved_steps() < 1) throw UserError("config: steps must be >= 1");
  if (batch_size > resolved_n())
    throw UserError("config: batch_size exceeds n");
  if (glc_sigma < 0.0) throw UserError("config: sigma must be positive");
  if (flow_bins < 2) throw UserError("config: flow bins must be >= 2");
  if (flow_bound <= 0.0) throw UserError("config: flow bound must be > 0");
  if (flow_layers < 1) throw UserError("config: flow layers must be >= 1");
  if (flow_cond_hidden < 1)
    throw UserError("config: conditioner width must be >= 1");
  if (elbo_samples < 1) throw UserError("config: elbo_samples must be >= 1");
  if (posterior_draws < 1)
    throw UserError("config: posterior_draws must be >= 1");
  if (prior_sigma <= 0.0) throw UserError("config: prior sigma must be > 0");
  if (!(lr > 0.0)) throw UserError("config: learning rate must be > 0");
  if (matched_variance && dataset != DatasetName::bimodal1d)
    throw UserError("config: matched_variance applies to bimodal1d only");
  MlpSpec net = network();
  net.validate();
}

double ModelSlice::logpdf(const double* y) const {
  switch (cls) {
    case ModelClass::glc:
    case ModelClass::gl: {
      if (y_dim == 1) {
        const double s = chol[0];
        const double d = (y[0] - mu[0]) / s;
        return -0.5 * d * d - std::log(s) - 0.5 * kLog2Pi;
      }
      // solve L u = y - mu
      const double d0 = y[0] - mu[0], d1 = y[1] - mu[1];
      const double u0 = d0 / chol[0];
      const double u1 = (d1 - chol[1] * u0) / chol[2];
      return -0.5 * (u0 * u0 + u1 * u1) - 0.5 * log_det - kLog2Pi;
    }
    case ModelClass::fl:
      return y_dim == 1 ? flow1.logprob(y[0]) : flow2.logprob(y);
  }
  return 0.0;
}

void ModelSlice::sample(const double* z, double* y_out) const {
  switch (cls) {
    case ModelClass::glc:
    case ModelClass::gl:
      if (y_dim == 1) {
        y_out[0] = mu[0] + chol[0] * z[0];
      } else {
        y_out[0] = mu[0] + chol[0] * z[0];
        y_out[1] = mu[1] + chol[1] * z[0] + chol[2] * z[1];
      }
      return;
    case ModelClass::fl:
      if (y_dim == 1)
        y_out[0] = flow1.sample(z[0]);
      else
        flow2.sample(z, y_out);
      return;
  }
}

void ModelSlice::support(double* lo, double* hi) const {
  if (cls == ModelClass::fl) {
    if (y_dim == 1) {
      lo[0] = flow1.shift - 8.0 * flow1.scale;
      hi[0] = flow1.shift + 8.0 * flow1.scale;
    } else {
      for (int d = 0; d < 2; ++d) {
        lo[d] = flow2.shift[d] - 8.0 * flow2.scale[d];
        hi[d] = flow2.shift[d] + 8.0 * flow2.scale[d];
      }
    }
    return;
  }
  if (y_dim == 1) {
    lo[0] = mu[0] - 8.0 * chol[0];
    hi[0] = mu[0] + 8.0 * chol[0];
  } else {
    const double s0 = chol[0];
    const double s1 = std::sqrt(chol[1] * chol[1] + chol[2] * chol[2]);
    lo[0] = mu[0] - 8.0 * s0;
    hi[0] = mu[0] + 8.0 * s0;
    lo[1] = mu[1] - 8.0 * s1;
    hi[1] = mu[1] + 8.0 * s1;
  }
}

double ModelSlice::entropy_closed_form() const {
  if (cls == ModelClass::fl)
    throw UserError("closed-form entropy exists for Gaussian heads only");
  // 0.5 ln((2 pi e)^d |Sigma|)
  return 0.5 * y_dim * (kLog2Pi + 1.0) + 0.5 * log_det;
}

std::vector<double> Model::theta(double x, const double* w) const {
  const MlpSpec net = config.network();
  std::vector<double> out(net.output_dim);
  mlp_forward(net, w, &x, out.data());
  return out;
}

ModelSlice Model::slice(double x, const double* w) const {
  ModelSlice s;
  s.cls = config.model_class;
  s.y_dim = y_dim();
  if (s.cls == ModelClass::fl) {
    if (s.y_dim == 1)
      s.flow1 = flow_slice_1d(config.network(), w, x, config.flow1d(),
                              normalizer);
    else
      s.flow2 = flow_slice_2d(config.network(), w, x, config.flow2d(),
                              normalizer);
    return s;
  }
  const std::vector<double> th = theta(x, w);
  if (s.cls == ModelClass::glc) {
    const double sig = config.resolved_sigma();
    s.mu[0] = th[0];
    if (s.y_dim == 1) {
      s.chol[0] = sig;
      s.log_det = 2.0 * std::log(sig);
    } else {
      s.mu[1] = th[1];
      s.chol[0] = sig;
      s.chol[1] = 0.0;
      s.chol[2] = sig;
      s.log_det = 4.0 * std::log(sig);
    }
    return s;
  }
  // gl
  if (s.y_dim == 1) {
    s.mu[0] = th[0];
    s.chol[0] = std::exp(th[1]);
    s.log_det = 2.0 * th[1];
  } else {
    s.mu[0] = th[0];
    s.mu[1] = th[1];
    const double s1 = std::exp(th[2]);
    const double s2 = std::exp(th[3]);
    const double rho = std::tanh(th[4]);
    s.chol[0] = s1;
    s.chol[1] = rho * s2;
    s.chol[2] = s2 * std::sqrt(std::max(1.0 - rho * rho, 1e-300));
    s.log_det = 2.0 * th[2] + 2.0 * th[3] +
                log_one_minus_tanh_sq(th[4]);
  }
  return s;
}

double Model::logpdf(double x, const double* y, const double* w) const {
  return slice(x, w).logpdf(y);
}

std::vector<std::vector<double>> Model::weight_draws(std::size_t count) const {
  if (!config.bayes) return {weights};
  if (count == 0) count = static_cast<std::size_t>(config.posterior_draws);
  CounterRng rng(config.seed, streams::kPredictive);
  std::vector<std::vector<double>> draws;
  draws.reserve(count);
  for (std::size_t k = 0; k < count; ++k)
    draws.push_back(sample_weights(posterior, rng));
  return draws;
}

}  // namespace misfit
