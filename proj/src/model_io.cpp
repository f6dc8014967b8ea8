#include "misfit/model_io.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "misfit/csv.hpp"
#include "misfit/errors.hpp"

namespace misfit {

using json = nlohmann::ordered_json;

namespace {

void reject_unknown(const json& obj, const std::string& ptr,
                    const std::set<std::string>& allowed) {
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key))
      throw UserError("unknown config field " + ptr + "/" + key);
}

template <class T>
void read_field(const json& obj, const std::string& ptr, const char* key,
                T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw UserError("bad value at " + ptr + "/" + key);
  }
}

json config_to_json(const TrainConfig& c) {
  json j;
  j["dataset"] = {{"name", to_string(c.dataset)},
                  {"n", c.n},
                  {"seed", c.seed}};
  j["model"] = {{"class", to_string(c.model_class)}, {"bayes", c.bayes}};
  j["head"] = {{"sigma", c.glc_sigma},
               {"matched_variance", c.matched_variance}};
  j["network"] = {
      {"hidden", c.hidden},
      {"activation", c.activation == Activation::relu ? "relu" : "tanh"}};
  j["flow"] = {{"bins", c.flow_bins},
               {"bound", c.flow_bound},
               {"layers", c.flow_layers},
               {"cond_hidden", c.flow_cond_hidden}};
  j["variational"] = {{"prior_sigma", c.prior_sigma},
                      {"elbo_samples", c.elbo_samples},
                      {"init_q_sigma", c.init_q_sigma},
                      {"posterior_draws", c.posterior_draws}};
  j["optimizer"] = {{"lr", c.lr},
                    {"beta1", c.beta1},
                    {"beta2", c.beta2},
                    {"eps", c.adam_eps}};
  j["train"] = {{"steps", c.steps}, {"batch_size", c.batch_size}};
  j["test"] = {{"n", c.test_n}, {"seed", c.test_seed}};
  return j;
}

TrainConfig config_from_json(const json& j) {
  if (!j.is_object()) throw UserError("config must be a JSON object");
  reject_unknown(j, "", {"dataset", "model", "head", "network", "flow",
                         "variational", "optimizer", "train", "test"});
  TrainConfig c;

  if (!j.contains("dataset") || !j["dataset"].contains("name"))
    throw UserError("missing required field /dataset/name");
  if (!j.contains("model") || !j["model"].contains("class"))
    throw UserError("missing required field /model/class");

  {
    const json& d = j["dataset"];
    reject_unknown(d, "/dataset", {"name", "n", "seed"});
    c.dataset = dataset_from_string(d.at("name").get<std::string>());
    read_field(d, "/dataset", "n", c.n);
    read_field(d, "/dataset", "seed", c.seed);
  }
  {
    const json& m = j["model"];
    reject_unknown(m, "/model", {"class", "bayes"});
    c.model_class = model_class_from_string(m.at("class").get<std::string>());
    read_field(m, "/model", "bayes", c.bayes);
  }
  if (j.contains("head")) {
    const json& h = j["head"];
    reject_unknown(h, "/head", {"sigma", "matched_variance"});
    read_field(h, "/head", "sigma", c.glc_sigma);
    read_field(h, "/head", "matched_variance", c.matched_variance);
  }
  if (j.contains("network")) {
    const json& n = j["network"];
    reject_unknown(n, "/network", {"hidden", "activation"});
    read_field(n, "/network", "hidden", c.hidden);
    if (n.contains("activation")) {
      const std::string a = n.at("activation").get<std::string>();
      if (a == "relu")
        c.activation = Activation::relu;
      else if (a == "tanh")
        c.activation = Activation::tanh;
      else
        throw UserError("bad value at /network/activation (relu|tanh)");
    }
  }
  if (j.contains("flow")) {
    const json& f = j["flow"];
    reject_unknown(f, "/flow", {"bins", "bound", "layers", "cond_hidden"});
    read_field(f, "/flow", "bins", c.flow_bins);
    read_field(f, "/flow", "bound", c.flow_bound);
    read_field(f, "/flow", "layers", c.flow_layers);
    read_field(f, "/flow", "cond_hidden", c.flow_cond_hidden);
  }
  if (j.contains("variational")) {
    const json& v = j["variational"];
    reject_unknown(v, "/variational",
                   {"prior_sigma", "elbo_samples", "init_q_sigma",
                    "posterior_draws"});
    read_field(v, "/variational", "prior_sigma", c.prior_sigma);
    read_field(v, "/variational", "elbo_samples", c.elbo_samples);
    read_field(v, "/variational", "init_q_sigma", c.init_q_sigma);
    read_field(v, "/variational", "posterior_draws", c.posterior_draws);
  }
  if (j.contains("optimizer")) {
    const json& o = j["optimizer"];
    reject_unknown(o, "/optimizer", {"lr", "beta1", "beta2", "eps"});
    read_field(o, "/optimizer", "lr", c.lr);
    read_field(o, "/optimizer", "beta1", c.beta1);
    read_field(o, "/optimizer", "beta2", c.beta2);
    read_field(o, "/optimizer", "eps", c.adam_eps);
  }
  if (j.contains("train")) {
    const json& t = j["train"];
    reject_unknown(t, "/train", {"steps", "batch_size"});
    read_field(t, "/train", "steps", c.steps);
    read_field(t, "/train", "batch_size", c.batch_size);
  }
  if (j.contains("test")) {
    const json& t = j["test"];
    reject_unknown(t, "/test", {"n", "seed"});
    read_field(t, "/test", "n", c.test_n);
    read_field(t, "/test", "seed", c.test_seed);
  }
  c.validate();
  return c;
}

json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw UserError("invalid JSON in '" + path + "': " + e.what());
  }
  return j;
}

void dump_file(const json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace

TrainConfig config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw UserError(std::string("invalid config JSON: ") + e.what());
  }
  return config_from_json(j);
}

TrainConfig load_config(const std::string& path) {
  return config_from_json(parse_file(path));
}

std::string config_to_json_text(const TrainConfig& cfg) {
  return config_to_json(cfg).dump(2);
}

void save_model(const Model& model, const std::string& path) {
  json j;
  j["format"] = "misfit-model";
  j["version"] = 1;
  j["config"] = config_to_json(model.config);
  if (model.config.model_class == ModelClass::fl)
    j["normalizer"] = {{"shift", model.normalizer.shift},
                       {"scale", model.normalizer.scale}};
  if (model.config.bayes)
    j["posterior"] = {{"mean", model.posterior.mean},
                      {"raw_scale", model.posterior.raw_scale}};
  else
    j["weights"] = model.weights;
  dump_file(j, path);
}

Model load_model(const std::string& path) {
  const json j = parse_file(path);
  if (!j.is_object() || j.value("format", "") != "misfit-model")
    throw UserError("'" + path + "' is not a misfit model artifact");
  Model m;
  m.config = config_from_json(j.at("config"));
  if (j.contains("normalizer")) {
    m.normalizer.shift =
        j["normalizer"].at("shift").get<std::vector<double>>();
    m.normalizer.scale =
        j["normalizer"].at("scale").get<std::vector<double>>();
  }
  const std::size_t P = m.config.network().param_count();
  if (m.config.bayes) {
    if (!j.contains("posterior"))
      throw UserError("model file lacks the posterior block");
    m.posterior.mean = j["posterior"].at("mean").get<std::vector<double>>();
    m.posterior.raw_scale =
        j["posterior"].at("raw_scale").get<std::vector<double>>();
    if (m.posterior.mean.size() != P || m.posterior.raw_scale.size() != P)
      throw UserError("posterior size does not match the network spec");
  } else {
    if (!j.contains("weights"))
      throw UserError("model file lacks the weights array");
    m.weights = j.at("weights").get<std::vector<double>>();
    if (m.weights.size() != P)
      throw UserError("weights size does not match the network spec");
  }
  return m;
}

void write_loss_curve_csv(const Model& model, const std::string& path) {
  CsvWriter csv(path);
  csv.row(std::vector<std::string>{"step", "loss"});
  for (const auto& [step, loss] : model.loss_curve)
    csv.row(std::vector<std::string>{std::to_string(step),
                                     format_double(loss)});
}

void write_eval_report_json(const EvalReport& rep, const std::string& path) {
  json j;
  j["test_nll"] = rep.test_nll;
  if (rep.has_mse)
    j["test_mse"] = rep.test_mse;
  else
    j["test_mse"] = nullptr;
  j["wall_seconds"] = rep.wall_seconds;
  dump_file(j, path);
}

void write_eval_report_csv(const EvalReport& rep, const std::string& path) {
  CsvWriter csv(path);
  csv.row(std::vector<std::string>{"test_nll", "test_mse", "wall_seconds"});
  csv.row(std::vector<std::string>{
      format_double(rep.test_nll),
      rep.has_mse ? format_double(rep.test_mse) : "NA",
      format_double(rep.wall_seconds)});
}

void write_table_json(const TableResult& table, const std::string& path) {
  json rows = json::array();
  for (const auto& r : table.rows) {
    json row;
    row["model"] = r.model;
    row["nll_mean"] = r.nll_mean;
    row["nll_sem"] = r.nll_sem;
    if (r.has_mse) {
      row["mse_mean"] = r.mse_mean;
      row["mse_sem"] = r.mse_sem;
    } else {
      row["mse_mean"] = nullptr;
      row["mse_sem"] = nullptr;
    }
    rows.push_back(row);
  }
  json j;
  j["table"] = table.id;
  j["seeds"] = table.seeds;
  j["rows"] = rows;
  dump_file(j, path);
}

}  // namespace misfit
