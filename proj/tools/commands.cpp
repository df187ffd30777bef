// Copyright 2026 The UberNet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "ubernet/checkpoint.hpp"
#include "ubernet/csv.hpp"
#include "ubernet/error.hpp"
#include "ubernet/eval.hpp"
#include "ubernet/panel.hpp"
#include "ubernet/train.hpp"

namespace ubernet::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string num(double v) { return std::isfinite(v) ? csv::format_double(v) : ""; }

std::string out_path(const RunConfig& c, const std::string& name) {
  return (fs::path(c.out) / name).string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text) || !out.flush()) throw InputError("cannot write " + path);
}

void write_json(const std::string& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

// The CSV dialect has no quoting; free text loses its commas and newlines.
std::string cell(std::string s) {
  for (auto& ch : s) {
    if (ch == ',') ch = ';';
    if (ch == '\n' || ch == '\r') ch = ' ';
  }
  return s;
}

json report_json(const EvalReport& r) {
  json j = {{"model", r.model}, {"slice", r.slice}, {"n", r.n}, {"failed", r.failed}};
  j["rmse"] = std::isfinite(r.rmse) ? json(r.rmse) : json(nullptr);
  j["smape"] = std::isfinite(r.smape) ? json(r.smape) : json(nullptr);
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

std::string report_row(const EvalReport& r) {
  return cell(r.model) + "," + cell(r.slice) + "," + std::to_string(r.n) + "," +
         num(r.rmse) + "," + num(r.smape) + "," + (r.failed ? "1" : "0") + "," + cell(r.note);
}

const char* kReportHeader = "model,slice,n,rmse,smape,failed,note\n";

Panel load_panel(const RunConfig& c) { return read_panel_files(c.panel, c.interval); }

void write_residuals(const std::string& path, const std::vector<ResidualRecord>& records) {
  std::string text = "datetime,region,forecast,actual\n";
  for (const auto& r : records) {
    text += format_time(r.time) + "," + cell(r.region) + "," + num(r.forecast) + "," +
            num(r.actual) + "\n";
  }
  write_text(path, text);
}

std::vector<ResidualRecord> read_residuals(const std::string& path) {
  const auto table = csv::read_file(path);
  const long dt = table.column("datetime");
  const long region = table.column("region");
  const long forecast = table.column("forecast");
  const long actual = table.column("actual");
  if (dt < 0 || region < 0 || forecast < 0 || actual < 0) {
    throw SchemaError(path + ": residuals need datetime,region,forecast,actual columns");
  }
  std::vector<ResidualRecord> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    ResidualRecord rec;
    if (!try_parse_time(row[dt], rec.time)) {
      throw ParseError(path + ": malformed datetime '" + row[dt] + "'", table.lines[r]);
    }
    rec.region = row[region];
    if (!csv::parse_double(row[forecast], rec.forecast) || !csv::parse_double(row[actual], rec.actual)) {
      throw ParseError(path + ": malformed number", table.lines[r]);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

// The resolved schema (inferred categorical sizes filled in) is what the
// network was trained on.
Panel resolved(const Panel& p) {
  Panel out = p;
  out.schema = resolve_cardinalities(p);
  return out;
}

std::unique_ptr<UbernetForecaster> trained_network(const RunConfig& c, const Panel& panel,
                                                   std::size_t split, std::ostream& log) {
  if (!c.checkpoint.empty()) {
    auto ck = load_checkpoint(c.checkpoint, schema_fingerprint(input_columns(panel)));
    log << "loaded " << c.checkpoint << "\n";
    return std::make_unique<UbernetForecaster>(std::move(ck.network), std::move(ck.normalizer));
  }
  auto model = std::make_unique<UbernetForecaster>(c.ubernet_settings(), c.seed);
  model->fit(panel, split);
  log << "trained on " << split << " slots, final loss " << num(model->loss_history().back())
      << "\n";
  return model;
}

WindowBatch test_windows(const UbernetForecaster& model, const Panel& panel, std::size_t split) {
  const auto lookback = model.network().config.lookback;
  const auto first = std::max(split, lookback + 1);
  if (first >= panel.size()) throw RangeError("no test windows after the split");
  auto batch = build_windows(model.normalizer().apply(resolved(panel)), lookback, first, panel.size());
  if (batch.columns != model.network().config.inputs) {
    throw CompatibilityError("panel columns do not match the network inputs");
  }
  return batch;
}

// ---------------------------------------------------------------------------

int cmd_synth(const RunConfig& c, std::ostream& log) {
  const auto panel = synth_panel(c.synth_config());
  const auto path = out_path(c, "panel.csv");
  write_panel_files(path, panel, std::vector<std::uint8_t>(panel.values.size(), 0));
  log << "wrote " << panel.size() << " slots to " << path << "\n";
  return kOk;
}

int cmd_ingest(const RunConfig& c, std::ostream& log) {
  if (c.pickups.empty() || c.schema.empty()) {
    throw ContractError("ingest needs --pickups and --schema");
  }
  std::ifstream events_in(c.pickups);
  if (!events_in) throw InputError("cannot open pickups file " + c.pickups);
  std::vector<RawPickupEvent> events;
  try {
    events = parse_pickups(events_in);
  } catch (const ParseError& e) {
    throw e.with_file(c.pickups);
  } catch (const SchemaError& e) {
    throw SchemaError(c.pickups + ": " + e.what());
  }
  const auto schema = read_schema_file(c.schema);

  TimePoint start;
  TimePoint end;
  const std::chrono::minutes interval{c.interval};
  if (!c.start.empty()) {
    start = parse_time(c.start);
  } else {
    if (events.empty()) throw InputError("no events to infer the grid from; set --start and --end");
    auto first = events.front().timestamp;
    for (const auto& e : events) first = std::min(first, e.timestamp);
    start = std::chrono::floor<std::chrono::days>(first);
  }
  if (!c.end.empty()) {
    end = parse_time(c.end);
  } else {
    if (events.empty()) throw InputError("no events to infer the grid from; set --end");
    auto last = events.front().timestamp;
    for (const auto& e : events) last = std::max(last, e.timestamp);
    end = start + interval * ((last - start) / interval + 1);
  }
  const TimeGrid grid(start, end, c.interval);
  const RegionScope scope{c.region};
  const auto agg = aggregate_counts(events, grid, scope);

  FeatureTables tables;
  if (!c.features.empty()) tables = read_feature_tables(c.features);
  Adjacency adjacency;
  if (!c.adjacency.empty()) {
    std::ifstream adj_in(c.adjacency);
    if (!adj_in) throw InputError("cannot open adjacency file " + c.adjacency);
    try {
      adjacency = read_adjacency(adj_in);
    } catch (const ParseError& e) {
      throw e.with_file(c.adjacency);
    }
  }
  const auto joined = join_features(agg.panel, tables, schema);
  const auto mask = joined.missing;
  const auto panel = impute_missing(joined, adjacency, ImputeOptions{c.fallback_slots});

  const auto path = out_path(c, "panel.csv");
  write_panel_files(path, panel, mask);
  std::size_t imputed = 0;
  for (auto m : mask) imputed += m ? 1 : 0;
  json report = {{"events_total", agg.total_events},
                 {"events_counted", agg.counted},
                 {"events_dropped_outside_grid", agg.dropped_outside_grid},
                 {"events_out_of_scope", agg.out_of_scope},
                 {"slots", panel.size()},
                 {"features", panel.schema.size()},
                 {"imputed_cells", imputed},
                 {"start", format_time(grid.start())},
                 {"end", format_time(grid.end())},
                 {"region", scope.label()}};
  write_json(out_path(c, "ingest_report.json"), report);
  log << "ingested " << agg.counted << " of " << agg.total_events << " events into "
      << panel.size() << " slots (" << imputed << " cells imputed)\n";
  return kOk;
}

int cmd_train(const RunConfig& c, std::ostream& log) {
  if (c.model != "ubernet") throw ContractError("train fits the ubernet model only");
  const auto panel = load_panel(c);
  const auto split = c.split_slot(panel);
  UbernetForecaster model(c.ubernet_settings(), c.seed);
  model.set_epoch_callback([&](std::size_t epoch, double loss) {
    log << "epoch " << epoch + 1 << " loss " << num(loss) << "\n";
  });
  model.fit(panel, split);
  const auto& history = model.loss_history();
  std::string text = "epoch,loss\n";
  for (std::size_t i = 0; i < history.size(); ++i) {
    text += std::to_string(i + 1) + "," + num(history[i]) + "\n";
  }
  write_text(out_path(c, "loss_history.csv"), text);
  save_checkpoint(out_path(c, "checkpoint.json"), model.network(), model.normalizer(),
                  CheckpointMeta{c.seed, history.size(), history.back()});
  log << "final train loss " << num(history.back()) << "\n";
  return kOk;
}

int cmd_eval(const RunConfig& c, std::ostream& log) {
  const auto panel = load_panel(c);
  const auto split = c.split_slot(panel);
  std::string text = kReportHeader;
  json rows = json::array();
  if (!c.checkpoint.empty()) {
    const auto model = trained_network(c, panel, split, log);
    const auto from = std::max(split, model->network().config.lookback + 1);
    const auto forecasts = model->predict(panel, from, panel.size());
    std::vector<double> clamped;
    std::vector<ResidualRecord> residuals;
    for (std::size_t i = 0; i < forecasts.size(); ++i) {
      clamped.push_back(std::max(0.0, forecasts[i]));
      residuals.push_back({panel.time(from + i), panel.scope.label(), clamped.back(),
                           panel.pickups[from + i]});
    }
    const std::vector<double> actuals(panel.pickups.begin() + static_cast<std::ptrdiff_t>(from),
                                      panel.pickups.end());
    const auto report = make_report("ubernet", "test", clamped, actuals);
    text += report_row(report) + "\n";
    rows.push_back(report_json(report));
    write_residuals(out_path(c, "residuals.csv"), residuals);
  } else {
    for (const auto& r : evaluate_feature_sets(panel, make_factory(c), c.feature_set_list(), split,
                                               c.harness_options())) {
      text += report_row(r) + "\n";
      rows.push_back(report_json(r));
    }
  }
  write_text(out_path(c, "eval.csv"), text);
  write_json(out_path(c, "eval.json"), {{"command", "eval"}, {"rows", rows}});
  log << text;
  return kOk;
}

int cmd_cv(const RunConfig& c, std::ostream& log) {
  const auto panel = load_panel(c);
  const auto plan = make_fold_plan(panel.grid, c.folds, c.min_train_fraction);
  const auto result = rolling_cv(panel, make_factory(c), plan, c.harness_options());
  std::string text = "model,fold,train_start,test_start,test_end,n,rmse,smape,failed,note\n";
  json folds = json::array();
  for (std::size_t i = 0; i < result.folds.size(); ++i) {
    const auto& r = result.folds[i];
    const auto& f = plan.folds[i];
    text += cell(r.model) + "," + r.slice + "," + format_time(panel.time(f.train_begin)) + "," +
            format_time(panel.time(f.test_begin)) + "," + format_time(panel.grid.slot_start(f.test_end)) +
            "," + std::to_string(r.n) + "," + num(r.rmse) + "," + num(r.smape) + "," +
            (r.failed ? "1" : "0") + "," + cell(r.note) + "\n";
    folds.push_back(report_json(r));
  }
  const auto& p = result.pooled;
  text += cell(p.model) + ",pooled,,,," + std::to_string(p.n) + "," + num(p.rmse) + "," +
          num(p.smape) + "," + (p.failed ? "1" : "0") + "," + cell(p.note) + "\n";
  write_text(out_path(c, "cv.csv"), text);
  write_residuals(out_path(c, "residuals.csv"), result.residuals);
  write_json(out_path(c, "cv.json"),
             {{"command", "cv"}, {"folds", folds}, {"pooled", report_json(result.pooled)}});
  log << text;
  return kOk;
}

int cmd_ablate(const RunConfig& c, std::ostream& log) {
  const auto panel = load_panel(c);
  const auto split = c.split_slot(panel);
  const auto result = ablate_one_by_one(panel, make_factory(c), split, c.harness_options());
  std::string text = "feature,model,n,rmse,smape,delta_rmse,failed,note\n";
  json rows = json::array();
  for (const auto& row : result.rows) {
    const auto& r = row.report;
    text += cell(row.feature) + "," + cell(r.model) + "," + std::to_string(r.n) + "," +
            num(r.rmse) + "," + num(r.smape) + "," + num(row.delta_rmse) + "," +
            (r.failed ? "1" : "0") + "," + cell(r.note) + "\n";
    auto j = report_json(r);
    j["feature"] = row.feature;
    j["delta_rmse"] = std::isfinite(row.delta_rmse) ? json(row.delta_rmse) : json(nullptr);
    rows.push_back(j);
  }
  write_text(out_path(c, "ablation.csv"), text);
  write_json(out_path(c, "ablation.json"), {{"command", "ablate"},
                                            {"measure", "one-by-one ablation"},
                                            {"full", report_json(result.full)},
                                            {"rows", rows}});
  log << "full-feature rmse " << num(result.full.rmse) << "\n" << text;
  return kOk;
}

int cmd_importance(const RunConfig& c, std::ostream& log) {
  const auto panel = load_panel(c);
  const auto split = c.split_slot(panel);
  const auto model = trained_network(c, panel, split, log);
  const auto rows = permutation_importance(model->network(), model->normalizer(),
                                           test_windows(*model, panel, split), c.seed,
                                           c.importance_repeats, c.jobs);
  std::string text = "rank,feature,permutation_importance\n";
  json j = json::array();
  for (const auto& r : rows) {
    text += std::to_string(r.rank) + "," + cell(r.feature) + "," + num(r.importance) + "\n";
    j.push_back({{"rank", r.rank}, {"feature", r.feature}, {"permutation_importance", r.importance}});
  }
  write_text(out_path(c, "importance.csv"), text);
  write_json(out_path(c, "importance.json"),
             {{"command", "importance"}, {"measure", "mean |delta RMSE| under permutation"}, {"rows", j}});
  log << text;
  return kOk;
}

int cmd_pdp(const RunConfig& c, std::ostream& log) {
  const auto panel = load_panel(c);
  const auto split = c.split_slot(panel);
  auto features = c.pdp_feature_list();
  if (features.empty()) {
    for (const auto& f : panel.schema.features()) {
      if (f.kind == FeatureKind::Continuous) features.push_back(f.name);
    }
  }
  if (features.empty()) throw ContractError("no continuous features for partial dependence");
  const auto model = trained_network(c, panel, split, log);
  const auto windows = test_windows(*model, panel, split);
  json curves = json::object();
  for (const auto& feature : features) {
    const auto grid = pdp_grid(panel, feature, split, panel.size(), c.pdp_points);
    const auto curve =
        partial_dependence(model->network(), model->normalizer(), windows, feature, grid);
    std::string text = "value,mean_prediction\n";
    json pts = json::array();
    for (const auto& [v, y] : curve) {
      text += num(v) + "," + num(y) + "\n";
      pts.push_back({v, y});
    }
    write_text(out_path(c, "pdp_" + feature + ".csv"), text);
    curves[feature] = pts;
    log << "pdp_" << feature << ".csv: " << curve.size() << " points\n";
  }
  write_json(out_path(c, "pdp.json"), {{"command", "pdp"}, {"curves", curves}});
  return kOk;
}

int cmd_breakdown(const RunConfig& c, std::ostream& log) {
  const auto path = c.residuals.empty() ? out_path(c, "residuals.csv") : c.residuals;
  const auto records = read_residuals(path);
  if (records.empty()) throw InputError(path + " holds no residuals");
  const auto by = c.breakdown_by == "region" ? BreakdownKey::Region : BreakdownKey::Hour;
  const auto reports = error_breakdown(records, by, c.model);
  std::string text = std::string(c.breakdown_by) + ",n,rmse,smape\n";
  json rows = json::array();
  for (const auto& r : reports) {
    text += cell(r.slice) + "," + std::to_string(r.n) + "," + num(r.rmse) + "," +
            num(r.smape) + "\n";
    rows.push_back(report_json(r));
  }
  write_text(out_path(c, "breakdown_" + c.breakdown_by + ".csv"), text);
  write_json(out_path(c, "breakdown_" + c.breakdown_by + ".json"),
             {{"command", "breakdown"}, {"by", c.breakdown_by}, {"rows", rows}});
  log << text;
  return kOk;
}

int cmd_gradcheck(const RunConfig& c, std::ostream& log) {
  const Panel panel = fs::exists(c.panel) ? load_panel(c) : synth_panel(c.synth_config());
  const auto settings = c.ubernet_settings();
  NetworkConfig config = settings.network;
  const auto data = resolved(panel);
  config.inputs = input_columns(data);
  if (config.head == HeadKind::Softmax) {
    config.bin_edges.clear();
    config.bin_values.clear();
    for (std::size_t b = 0; b <= c.bins; ++b) config.bin_edges.push_back(-3.0 + 6.0 * b / c.bins);
    for (std::size_t b = 0; b < c.bins; ++b) {
      config.bin_values.push_back(0.5 * (config.bin_edges[b] + config.bin_edges[b + 1]));
    }
  }
  const auto net = init_params(config, c.seed);
  const auto norm = Normalizer::fit(data, 0, data.size()).apply(data);
  const auto batch = build_windows(norm, config.lookback, config.lookback + 1, config.lookback + 2);
  const auto& window = batch.windows.front();
  GradCheckOptions options;
  options.step = c.gradcheck_step;
  options.tolerance = c.gradcheck_tolerance;
  options.coordinates = c.gradcheck_coordinates;
  options.seed = c.seed;
  const auto report = grad_check(net, window.input, window.target, settings.loss, options);
  json j = {{"passed", report.passed},
            {"max_rel_err", report.max_rel_err},
            {"worst_parameter", report.worst_parameter},
            {"worst_index", report.worst_index},
            {"worst_analytic", report.worst_analytic},
            {"worst_numeric", report.worst_numeric},
            {"checked", report.checked},
            {"failed", report.failed},
            {"largest_failing_gradient", report.largest_failing},
            {"parameters", parameter_count(config)}};
  write_json(out_path(c, "gradcheck.json"), j);
  log << (report.passed ? "PASS" : "FAIL") << " max relative error " << report.max_rel_err
      << " over " << report.checked << " coordinates (worst: " << report.worst_parameter << "["
      << report.worst_index << "])\n";
  return report.passed ? kOk : kGradCheckFailed;
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const SchemaError*>(&e)) return kSchemaFailure;
  if (dynamic_cast<const ParseError*>(&e)) return kParseFailure;
  if (dynamic_cast<const DivergenceError*>(&e)) return kDiverged;
  if (dynamic_cast<const CompatibilityError*>(&e) || dynamic_cast<const FormatError*>(&e)) {
    return kCheckpointMismatch;
  }
  return kFailure;
}

int run_command(const std::string& command, const RunConfig& config, std::ostream& log) {
  config.validate();
  fs::create_directories(config.out);
  write_text(out_path(config, "effective.conf"), config.echo());
  if (command == "synth") return cmd_synth(config, log);
  if (command == "ingest") return cmd_ingest(config, log);
  if (command == "train") return cmd_train(config, log);
  if (command == "eval") return cmd_eval(config, log);
  if (command == "cv") return cmd_cv(config, log);
  if (command == "ablate") return cmd_ablate(config, log);
  if (command == "importance") return cmd_importance(config, log);
  if (command == "pdp") return cmd_pdp(config, log);
  if (command == "breakdown") return cmd_breakdown(config, log);
  if (command == "gradcheck") return cmd_gradcheck(config, log);
  throw ContractError("unknown command '" + command + "'");
}

}  // namespace ubernet::cli
