#include <filesystem>

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sciagent/agents.hpp"
#include "sciagent/config.hpp"
#include "sciagent/errors.hpp"
#include "sciagent/experiments.hpp"
#include "sciagent/workbench.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace sciagent;

namespace {

std::vector<EvalRecord> records_from(const std::vector<py::dict>& rows) {
  std::vector<EvalRecord> out;
  int step = 0;
  for (const auto& r : rows) {
    EvalRecord e;
    e.objective = r["objective"].cast<double>();
    e.design = r.contains("design") ? r["design"].cast<Vec>() : Vec{};
    e.step_index = r.contains("step_index") ? r["step_index"].cast<int>() : step + 1;
    auto source = r.contains("source") ? r["source"].cast<std::string>() : std::string("agent");
    e.source = source == "bo" ? EvalSource::bo : source == "random_init" ? EvalSource::random_init : EvalSource::agent;
    out.push_back(std::move(e));
    ++step;
  }
  return out;
}

py::list records_to(const std::vector<EvalRecord>& records) {
  py::list out;
  for (const auto& r : records) {
    py::dict d;
    d["design"] = r.design;
    d["objective"] = r.objective;
    d["step_index"] = r.step_index;
    d["source"] = to_string(r.source);
    out.append(d);
  }
  return out;
}

Sense sense_of(const std::string& s) {
  if (s == "min" || s == "minimize") return Sense::minimize;
  if (s == "max" || s == "maximize") return Sense::maximize;
  throw PreconditionError("sense must be 'min' or 'max'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of sciagent";

  py::register_exception<Error>(m, "Error");

  // objectives
  m.def("six_hump_camel", &six_hump_camel, py::arg("x1"), py::arg("x2"));
  m.def("synthetic_yield", &synthetic_yield, py::arg("design"));
  m.def("yield_optimum", &yield_optimum);
  m.def("design_parameters", [] {
    py::list out;
    for (const auto& p : design_parameters()) out.append(py::make_tuple(p.name, p.unit, p.lo, p.hi));
    return out;
  });
  m.def("latin_hypercube", &latin_hypercube, py::arg("n"), py::arg("dim"), py::arg("seed"));

  // GP / EI
  py::class_<GPModel>(m, "GPModel")
      .def("predict", [](const GPModel& g, const Vec& x) {
        auto p = g.predict(x);
        return py::make_tuple(p.mean, p.variance);
      })
      .def_property_readonly("log_marginal_likelihood", &GPModel::log_marginal_likelihood)
      .def_property_readonly("degenerate", &GPModel::degenerate)
      .def_property_readonly("lengthscales", [](const GPModel& g) { return g.hyper().lengthscales; })
      .def_property_readonly("noise_variance", &GPModel::noise_variance)
      .def_property_readonly("signal_variance", &GPModel::signal_variance);
  m.def(
      "gp_fit",
      [](const std::vector<Vec>& x, const Vec& y, const Vec& lo, const Vec& hi, int starts, int evals,
         std::optional<double> fixed_noise, std::uint64_t seed) {
        GpFitOptions o;
        o.starts = starts;
        o.evals_per_start = evals;
        o.fixed_noise = fixed_noise;
        o.seed = seed;
        return gp_fit(x, y, Box{lo, hi}, o);
      },
      py::arg("x"), py::arg("y"), py::arg("lo"), py::arg("hi"), py::arg("starts") = 64, py::arg("evals_per_start") = 200,
      py::arg("fixed_noise") = py::none(), py::arg("seed") = 0);
  m.def("expected_improvement", py::overload_cast<double, double, double>(&expected_improvement), py::arg("mean"),
        py::arg("sigma"), py::arg("best"));

  // campaigns
  m.def(
      "bo_campaign",
      [](std::function<double(const Vec&)> objective, const Vec& lo, const Vec& hi, int n_init, int budget,
         std::uint64_t seed, const std::string& sense, int gp_starts) {
        CampaignConfig c;
        c.n_init = n_init;
        c.eval_budget = budget;
        c.seed = seed;
        BoOptions o;
        o.sense = sense_of(sense);
        o.gp.starts = gp_starts;
        return records_to(bo_campaign(objective, Box{lo, hi}, c, o));
      },
      py::arg("objective"), py::arg("lo"), py::arg("hi"), py::arg("n_init") = 10, py::arg("eval_budget") = 60,
      py::arg("seed") = 0, py::arg("sense") = "min", py::arg("gp_starts") = 64);
  m.def(
      "camel_campaign",
      [](int n_init, int budget, std::uint64_t seed) {
        CampaignConfig c{n_init, budget, seed, 17.0};
        std::vector<EvalRecord> h;
        {
          py::gil_scoped_release release;
          h = bo_campaign([](const Vec& x) { return six_hump_camel(x[0], x[1]); }, camel_box(), c);
        }
        return records_to(h);
      },
      py::arg("n_init") = 10, py::arg("eval_budget") = 60, py::arg("seed") = 0);
  m.def("running_max", &running_max);
  m.def("running_min", &running_min);
  m.def(
      "evaluations_to_threshold",
      [](const std::vector<double>& v, double t, const std::string& sense) {
        return evaluations_to_threshold(v, t, sense_of(sense));
      },
      py::arg("values"), py::arg("threshold"), py::arg("sense") = "max");
  m.def(
      "compare_campaigns",
      [](const std::vector<std::pair<std::string, std::vector<py::dict>>>& histories, double threshold,
         const std::string& sense) {
        std::vector<NamedHistory> hs;
        for (const auto& [name, rows] : histories) hs.push_back({name, records_from(rows), sense_of(sense)});
        auto c = compare_campaigns(hs, threshold);
        py::dict out;
        out["table"] = c.table();
        py::list rows;
        for (const auto& s : c.campaigns) {
          py::dict d;
          d["name"] = s.name;
          d["running_best"] = s.running_best;
          d["best"] = s.best;
          d["evals_to_threshold"] = s.evals_to_threshold;
          d["evals_to_threshold_no_init"] = s.evals_to_threshold_no_init;
          rows.append(d);
        }
        out["campaigns"] = rows;
        out["svg"] = comparison_svg(c, "running best");
        py::list csvs;
        for (const auto& h : hs) csvs.append(campaign_csv(h));
        out["csv"] = csvs;
        return out;
      },
      py::arg("histories"), py::arg("threshold"), py::arg("sense") = "max");

  // agents (JSON crosses the boundary as text)
  m.def("validate_plan", [](const std::string& doc) {
    Json steps = Json::array();
    for (const auto& s : validate_plan(Json::parse(doc))) steps.push_back(s);
    return steps.dump();
  });
  m.def("parse_plan", [](const std::string& text) {
    Json steps = Json::array();
    for (const auto& s : parse_plan(text)) steps.push_back(s);
    return steps.dump();
  });
  m.def("command_denial", [](const std::string& command, const std::string& workspace) {
    return CommandPolicy{}.denial_reason(command, workspace);
  });
  m.def("extract_pdf_text", [](const py::bytes& data) { return extract_pdf_text(std::string(data)); });
  m.def("html_to_text", &html_to_text);
  m.def("workflow_names", &workflow_names);
  m.def(
      "run_workflow",
      [](const std::string& workflow, const std::string& query, const std::string& script, const std::string& root,
         const std::string& config_json, const std::string& run_id) {
        auto doc = config_json.empty() ? Json::object() : Json::parse(config_json);
        auto config = config_from_json(doc, fs::current_path());
        config.backend.script = fs::absolute(script);
        auto backend = make_backend(config.backend);
        auto tools = make_standard_tools(make_toolbox(config.tools));
        AgentServices services;
        services.tools = &tools;
        services.papers = make_paper_source(config.tools);
        auto id = run_id.empty() ? new_run_id() : run_id;
        auto ws = prepare_workspace(root, id);
        auto handles = open_run(ws, id, logical_clock());
        Session session(*backend, *handles.transcript, config.limits, config.prompts);
        session.set_checkpoints(handles.checkpoints.get());
        auto result = run_workflow(workflow, session, services, initial_state(id, ws, query));
        py::dict out;
        out["run_id"] = id;
        out["workspace"] = ws.string();
        out["status"] = to_string(result.state.status);
        out["output"] = result.output.string();
        out["state"] = to_json(result.state).dump();
        return out;
      },
      py::arg("workflow"), py::arg("query"), py::arg("script"), py::arg("workspace_root"),
      py::arg("config_json") = "", py::arg("run_id") = "");
  m.def("read_transcript", [](const std::string& file) {
    std::vector<std::string> lines;
    for (const auto& e : read_transcript(file)) lines.push_back(serialize_event(e));
    return lines;
  });
}
