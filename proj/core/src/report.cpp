#include "emokd/report.hpp"

#include "nlohmann/json.hpp"

#include "emokd/errors.hpp"
#include "emokd/plot.hpp"
#include "emokd/util.hpp"

namespace emokd {

using nlohmann::json;

namespace {

void write_report_files(const std::filesystem::path& run_dir,
                        const std::string& name, const json& summary,
                        const std::string& table, const std::string& plot) {
  atomic_write_file(run_dir / "summary" / (name + ".summary"),
                    summary.dump(2) + "\n");
  atomic_write_file(run_dir / "tables" / (name + ".table"), table);
  atomic_write_file(run_dir / "plots" / (name + ".plot"), plot);
}

json config_echo_json(const std::string& config_echo) {
  if (config_echo.empty()) return json(nullptr);
  return json::parse(config_echo);
}

}  // namespace

void emit_sweep_report(const SweepResult& sweep, const std::string& config_echo,
                       const std::filesystem::path& run_dir) {
  json points = json::array();
  std::string table = "label\tx\taccuracy";
  const bool has_kd =
      !sweep.points.empty() && sweep.points.front().final_l_kd.has_value();
  const bool has_params =
      !sweep.points.empty() && sweep.points.front().param_count.has_value();
  if (has_kd) table += "\tfinal_l_kd";
  if (has_params) table += "\tparam_count";
  table += '\n';

  for (const SweepPoint& p : sweep.points) {
    json jp = {{"label", p.label}, {"x", p.x}, {"accuracy", p.accuracy}};
    table += p.label + "\t" + format_double(p.x) + "\t" +
             format_double(p.accuracy);
    if (p.final_l_kd) {
      jp["final_l_kd"] = *p.final_l_kd;
      table += "\t" + format_double(*p.final_l_kd);
    }
    if (p.param_count) {
      jp["param_count"] = *p.param_count;
      table += "\t" + std::to_string(*p.param_count);
    }
    table += '\n';
    points.push_back(std::move(jp));
  }

  json summary = {{"report", sweep.name},
                  {"swept", sweep.swept},
                  {"points", points},
                  {"config", config_echo_json(config_echo)}};

  std::string plot;
  if (sweep.name == "gate_sweep") {
    std::vector<std::string> labels;
    std::vector<double> values;
    for (const SweepPoint& p : sweep.points) {
      labels.push_back(p.label);
      values.push_back(p.accuracy);
    }
    plot = bar_chart_svg("Accuracy per gate variant", "accuracy", labels, values);
  } else {
    std::vector<PlotSeries> series;
    PlotSeries acc{"accuracy", {}, {}};
    for (const SweepPoint& p : sweep.points) {
      acc.x.push_back(p.x);
      acc.y.push_back(p.accuracy);
    }
    series.push_back(std::move(acc));
    if (has_kd) {
      PlotSeries kd{"final L_KD", {}, {}};
      for (const SweepPoint& p : sweep.points) {
        kd.x.push_back(p.x);
        kd.y.push_back(*p.final_l_kd);
      }
      series.push_back(std::move(kd));
    }
    plot = line_chart_svg(sweep.name == "alpha_sweep"
                              ? "Accuracy and KL loss vs alpha"
                              : "Accuracy vs head depth",
                          sweep.swept, "value", series);
  }

  write_report_files(run_dir, sweep.name, summary, table, plot);
}

void emit_eval_report(const EvalReport& report, const std::string& config_echo,
                      const std::filesystem::path& run_dir) {
  json accuracies = json::object();
  std::vector<std::string> bar_labels;
  std::vector<double> bar_values;
  for (const auto& [system, acc] : report.accuracies) {
    accuracies[system] = acc;
    bar_labels.push_back(system);
    bar_values.push_back(acc);
  }
  json params = json::object();
  for (const auto& [component, count] : report.parameter_counts) {
    params[component] = count;
  }
  json summary = {
      {"report", "evaluation"},
      {"dataset", report.dataset},
      {"accuracies", accuracies},
      {"parameter_counts", params},
      {"complementarity",
       {{"both", report.partition.both},
        {"a_only", report.partition.a_only},
        {"b_only", report.partition.b_only},
        {"neither", report.partition.neither},
        {"oracle_upper_bound", oracle_upper_bound(report.partition)}}},
      {"config", config_echo_json(config_echo)}};

  std::string table = "sample_id\tv1_label\tv2_label\tfused_label\ttruth\n";
  for (const TraceRow& row : report.trace) {
    table += row.sample_id + "\t" + row.v1_label + "\t" + row.v2_label + "\t" +
             row.fused_label + "\t" + row.truth + "\n";
  }

  const std::string plot =
      bar_chart_svg("Per-system accuracy (" + report.dataset + ")", "accuracy",
                    bar_labels, bar_values);
  write_report_files(run_dir, "eval_report", summary, table, plot);
}

void emit_complementarity_report(const ComplementarityPartition& partition,
                                 const std::string& dataset,
                                 const std::string& config_echo,
                                 const std::filesystem::path& run_dir) {
  json summary = {{"report", "complementarity"},
                  {"dataset", dataset},
                  {"n", partition.n},
                  {"both", partition.both},
                  {"a_only", partition.a_only},
                  {"b_only", partition.b_only},
                  {"neither", partition.neither},
                  {"counts",
                   {{"both", partition.both_count},
                    {"a_only", partition.a_only_count},
                    {"b_only", partition.b_only_count},
                    {"neither", partition.neither_count}}},
                  {"oracle_upper_bound", oracle_upper_bound(partition)},
                  {"config", config_echo_json(config_echo)}};

  std::string table = "bucket\tfraction\tcount\n";
  table += "both\t" + format_double(partition.both) + "\t" +
           std::to_string(partition.both_count) + "\n";
  table += "a_only\t" + format_double(partition.a_only) + "\t" +
           std::to_string(partition.a_only_count) + "\n";
  table += "b_only\t" + format_double(partition.b_only) + "\t" +
           std::to_string(partition.b_only_count) + "\n";
  table += "neither\t" + format_double(partition.neither) + "\t" +
           std::to_string(partition.neither_count) + "\n";

  const std::string plot = bar_chart_svg(
      "Complementarity partition (" + dataset + ")", "fraction",
      {"both", "a_only", "b_only", "neither"},
      {partition.both, partition.a_only, partition.b_only, partition.neither});
  write_report_files(run_dir, "complementarity", summary, table, plot);
}

}  // namespace emokd
