#include "sciagent/experiments.hpp"
#include "sciagent/util.hpp"

namespace sciagent {

namespace fs = std::filesystem;

namespace {

void write_outputs(WorkbenchReport& report, const fs::path& out_dir, const std::string& title, bool svg) {
  for (const auto& h : report.histories) {
    auto path = out_dir / (h.name + ".csv");
    write_file_atomic(path, campaign_csv(h));
    report.files.push_back(path);
  }
  auto table = out_dir / "comparison.txt";
  write_file_atomic(table, report.comparison.table());
  report.files.push_back(table);
  if (svg) {
    auto chart = out_dir / "comparison.svg";
    write_file_atomic(chart, comparison_svg(report.comparison, title));
    report.files.push_back(chart);
  }
}

}  // namespace

WorkbenchReport run_camel_experiment(const WorkbenchSettings& settings, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  WorkbenchReport report;
  BoOptions options;
  options.sense = Sense::minimize;
  options.gp = settings.gp;
  auto camel = [](const Vec& x) { return six_hump_camel(x[0], x[1]); };
  for (int r = 0; r < settings.camel_replicates; ++r) {
    auto config = settings.camel;
    config.seed += static_cast<std::uint64_t>(r);
    report.histories.push_back(
        {"camel-bo-seed" + std::to_string(config.seed), bo_campaign(camel, camel_box(), config, options), Sense::minimize});
  }
  report.comparison = compare_campaigns(report.histories, kCamelMinimum + 1e-2);
  write_outputs(report, out_dir, "Six-hump camel: running minimum", settings.svg);
  return report;
}

WorkbenchReport run_design_race(const WorkbenchSettings& settings, Session& session, const fs::path& out_dir) {
  fs::create_directories(out_dir / "agent");
  WorkbenchReport report;
  RunState state;
  state.run_id = session.transcript().run_id();
  state.workspace = fs::canonical(out_dir / "agent").string();
  auto registry = ToolRegistry().with(simulator_tool());
  auto agent = agent_campaign(session, registry, state, settings.agent, settings.agent_options);
  if (state.data.contains("campaign_error")) report.agent_error = state.data["campaign_error"].dump();
  write_file_atomic(out_dir / "agent" / "state.json", to_json(state).dump(2) + "\n");
  report.histories.push_back({"agent", agent, Sense::maximize});

  BoOptions options;
  options.sense = Sense::maximize;
  options.gp = settings.gp;
  for (const auto& spec : settings.bo) {
    report.histories.push_back(
        {spec.name, bo_campaign(synthetic_yield, design_box(), spec.campaign, options), Sense::maximize});
  }
  report.comparison = compare_campaigns(report.histories, settings.agent.yield_threshold_log10);
  write_outputs(report, out_dir, "Design race: running maximum log10 yield", settings.svg);
  return report;
}

}  // namespace sciagent
