#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "misfit/datasets.hpp"
#include "misfit/errors.hpp"
#include "misfit/model_io.hpp"
#include "misfit/train.hpp"
#include "misfit/uncertainty.hpp"

namespace {

std::vector<double> parse_grid(const std::string& spec) {
  // "lo:hi:count" (commas accepted too)
  std::string s = spec;
  for (auto& ch : s)
    if (ch == ',') ch = ':';
  double lo, hi;
  long count;
  if (std::sscanf(s.c_str(), "%lf:%lf:%ld", &lo, &hi, &count) != 3 ||
      count < 1 || !(hi > lo))
    throw misfit::UserError("bad grid spec '" + spec +
                            "', expected lo:hi:count");
  std::vector<double> g(count);
  for (long i = 0; i < count; ++i)
    g[i] = count == 1 ? lo
                      : lo + (hi - lo) * static_cast<double>(i) /
                                 static_cast<double>(count - 1);
  return g;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "misfit: regression hypothesis classes (GLc / GL / FL, optionally "
      "Bayesian) on synthetic tasks with known ground truth"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a dataset CSV");
  std::string gen_dataset, gen_out = "dataset.csv";
  std::size_t gen_n = 0;
  std::uint64_t gen_seed = 1;
  gen->add_option("--dataset", gen_dataset,
                  "unimodal1d | bimodal1d | bimodal2d")
      ->required();
  gen->add_option("--n", gen_n, "number of samples")->required();
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--out", gen_out, "output CSV path");

  // train
  auto* train_cmd = app.add_subcommand("train", "train a model from a config");
  std::string train_config, train_dir = ".";
  train_cmd->add_option("--config", train_config, "run-config JSON path")
      ->required();
  train_cmd->add_option("--out-dir", train_dir,
                        "directory for model.json and loss_curve.csv");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a trained model");
  std::string eval_model, eval_json = "report.json", eval_csv = "report.csv";
  std::size_t eval_n = 0;
  std::uint64_t eval_seed = 0;
  eval_cmd->add_option("--model", eval_model, "model artifact path")
      ->required();
  eval_cmd->add_option("--out-json", eval_json, "report JSON path");
  eval_cmd->add_option("--out-csv", eval_csv, "report CSV path");
  eval_cmd->add_option("--test-n", eval_n, "override test set size");
  eval_cmd->add_option("--test-seed", eval_seed, "override held-out seed");

  // curves
  auto* curves = app.add_subcommand(
      "curves", "uncertainty curve (x, H, U_V, U_W, in_dist) CSV");
  std::string curves_model, curves_out = "curves.csv",
              curves_grid = "-6:6:241";
  std::size_t curves_draws = 0;
  curves->add_option("--model", curves_model, "model artifact path")
      ->required();
  curves->add_option("--grid", curves_grid, "x grid as lo:hi:count");
  curves->add_option("--draws", curves_draws,
                     "posterior draws (default: config value)");
  curves->add_option("--out", curves_out, "output CSV path");

  // table
  auto* table_cmd =
      app.add_subcommand("table", "reproduce a results table (CSV + JSON)");
  std::string table_id, table_prefix = "table";
  int table_seeds = 10;
  table_cmd->add_option("--id", table_id, "S1 | S2 | S3")->required();
  table_cmd->add_option("--seeds", table_seeds, "seeds per cell (>= 2)");
  table_cmd->add_option("--out-prefix", table_prefix,
                        "writes <prefix>.csv and <prefix>.json");

  try {
    app.parse(argc, argv);

    if (*gen) {
      misfit::Dataset ds = misfit::generate(
          misfit::dataset_from_string(gen_dataset), gen_n, gen_seed);
      misfit::write_dataset_csv(ds, gen_out);
    } else if (*train_cmd) {
      const misfit::TrainConfig cfg = misfit::load_config(train_config);
      const misfit::Model model = misfit::train(cfg);
      misfit::save_model(model, train_dir + "/model.json");
      misfit::write_loss_curve_csv(model, train_dir + "/loss_curve.csv");
    } else if (*eval_cmd) {
      misfit::Model model = misfit::load_model(eval_model);
      if (eval_n) model.config.test_n = eval_n;
      if (eval_seed) model.config.test_seed = eval_seed;
      const misfit::EvalReport rep = misfit::evaluate_default(model);
      misfit::write_eval_report_json(rep, eval_json);
      misfit::write_eval_report_csv(rep, eval_csv);
    } else if (*curves) {
      const misfit::Model model = misfit::load_model(curves_model);
      const auto ensemble = misfit::make_ensemble(model, curves_draws);
      const auto curve = misfit::uncertainty_curve(
          ensemble, parse_grid(curves_grid), model.config.seed);
      misfit::write_curve_csv(curve, curves_out);
    } else if (*table_cmd) {
      const misfit::TableResult table =
          misfit::reproduce_table(table_id, table_seeds);
      misfit::write_table_csv(table, table_prefix + ".csv");
      misfit::write_table_json(table, table_prefix + ".json");
    }
    return 0;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const misfit::DivergenceError& e) {
    std::cerr << "error: " << e.what() << " (step " << e.step() << ")\n";
    return 3;
  } catch (const misfit::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const misfit::UserError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
