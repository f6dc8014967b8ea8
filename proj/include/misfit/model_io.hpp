#pragma once

#include <string>

#include "misfit/model.hpp"
#include "misfit/train.hpp"

namespace misfit {

// Run-config JSON: every field defaulted except dataset.name and
// model.class; unknown keys are rejected with the JSON pointer of the
// offending field. See README for the schema.
TrainConfig config_from_json_text(const std::string& text);
TrainConfig load_config(const std::string& path);
std::string config_to_json_text(const TrainConfig& cfg);

// Model artifacts are plain JSON (weights as arrays).
void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

void write_loss_curve_csv(const Model& model, const std::string& path);
void write_eval_report_json(const EvalReport& rep, const std::string& path);
void write_eval_report_csv(const EvalReport& rep, const std::string& path);
void write_table_json(const TableResult& table, const std::string& path);

}  // namespace misfit
