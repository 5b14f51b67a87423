#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "sciagent/errors.hpp"
#include "sciagent/workbench.hpp"

namespace sciagent {

namespace {

bool reaches(double v, double threshold, Sense sense) {
  return sense == Sense::maximize ? v >= threshold : v <= threshold;
}

std::string fmt(double v, int precision = 6) {
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

std::string opt_count(const std::optional<int>& v) { return v ? std::to_string(*v) : "none"; }

std::vector<double> objectives(const std::vector<EvalRecord>& records) {
  std::vector<double> out;
  for (const auto& r : records) out.push_back(r.objective);
  return out;
}

}  // namespace

std::vector<double> running_max(const std::vector<double>& values) {
  std::vector<double> out;
  for (double v : values) out.push_back(out.empty() ? v : std::max(out.back(), v));
  return out;
}

std::vector<double> running_min(const std::vector<double>& values) {
  std::vector<double> out;
  for (double v : values) out.push_back(out.empty() ? v : std::min(out.back(), v));
  return out;
}

std::optional<int> evaluations_to_threshold(const std::vector<double>& values, double threshold, Sense sense) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (reaches(values[i], threshold, sense)) return static_cast<int>(i) + 1;
  }
  return std::nullopt;
}

Comparison compare_campaigns(const std::vector<NamedHistory>& histories, double threshold) {
  if (histories.empty()) throw PreconditionError("compare_campaigns needs at least one history");
  Comparison c;
  c.threshold = threshold;
  for (const auto& h : histories) {
    CampaignSummary s;
    s.name = h.name;
    auto values = objectives(h.records);
    s.running_best = h.sense == Sense::maximize ? running_max(values) : running_min(values);
    s.best = s.running_best.empty() ? std::nan("") : s.running_best.back();
    s.evals_to_threshold = evaluations_to_threshold(values, threshold, h.sense);
    int non_init = 0;
    for (const auto& r : h.records) {
      if (r.source != EvalSource::random_init) ++non_init;
      if (reaches(r.objective, threshold, h.sense)) {
        s.evals_to_threshold_no_init = non_init;
        break;
      }
    }
    c.campaigns.push_back(std::move(s));
  }
  return c;
}

std::string Comparison::table() const {
  std::vector<std::array<std::string, 5>> rows{
      {"campaign", "evaluations", "best", "evals_to_threshold", "evals_to_threshold_excl_init"}};
  for (const auto& s : campaigns) {
    rows.push_back({s.name, std::to_string(s.running_best.size()), s.running_best.empty() ? "none" : fmt(s.best),
                    opt_count(s.evals_to_threshold), opt_count(s.evals_to_threshold_no_init)});
  }
  std::array<std::size_t, 5> width{};
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
  }
  std::ostringstream os;
  os << "threshold: " << fmt(threshold) << "\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i + 1 < r.size()) os << std::left << std::setw(static_cast<int>(width[i])) << r[i] << "  ";
      else os << r[i];
    }
    os << "\n";
  }
  return os.str();
}

std::string campaign_csv(const NamedHistory& history) {
  std::ostringstream os;
  os << "step,source,x1,x2,x3,x4,x5,objective,running_max\n";
  auto best = history.sense == Sense::maximize ? running_max(objectives(history.records))
                                               : running_min(objectives(history.records));
  for (std::size_t i = 0; i < history.records.size(); ++i) {
    const auto& r = history.records[i];
    os << r.step_index << "," << to_string(r.source);
    for (std::size_t d = 0; d < 5; ++d) {
      os << ",";
      if (d < r.design.size()) os << fmt(r.design[d], 10);
    }
    os << "," << fmt(r.objective, 10) << "," << fmt(best[i], 10) << "\n";
  }
  return os.str();
}

std::string comparison_svg(const Comparison& comparison, const std::string& title) {
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  const double w = 720, h = 440, left = 70, right = 170, top = 40, bottom = 50;
  std::size_t steps = 1;
  double lo = comparison.threshold, hi = comparison.threshold;
  for (const auto& s : comparison.campaigns) {
    steps = std::max(steps, s.running_best.size());
    for (double v : s.running_best) {
      if (!std::isfinite(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (hi - lo < 1e-12) {
    lo -= 1.0;
    hi += 1.0;
  }
  double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  auto px = [&](double step) { return left + (w - left - right) * (steps > 1 ? (step - 1) / double(steps - 1) : 0.5); };
  auto py = [&](double v) { return top + (h - top - bottom) * (1.0 - (v - lo) / (hi - lo)); };

  auto escape = [](const std::string& s) {
    std::string out;
    for (char c : s) {
      if (c == '<') out += "&lt;";
      else if (c == '>') out += "&gt;";
      else if (c == '&') out += "&amp;";
      else out.push_back(c);
    }
    return out;
  };

  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
     << " " << h << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
     << escape(title) << "</text>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << h - bottom << "\" x2=\"" << w - right << "\" y2=\"" << h - bottom
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << h - bottom
     << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    double v = lo + (hi - lo) * t / 4.0;
    os << "<text x=\"" << left - 6 << "\" y=\"" << py(v) + 4 << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
       << "font-size=\"11\">" << fmt(v, 4) << "</text>\n";
  }
  os << "<text x=\"" << (left + w - right) / 2 << "\" y=\"" << h - 12
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">evaluation</text>\n";
  os << "<text x=\"" << left << "\" y=\"" << h - bottom + 16 << "\" font-family=\"sans-serif\" font-size=\"11\">1</text>\n";
  os << "<text x=\"" << w - right << "\" y=\"" << h - bottom + 16
     << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << steps << "</text>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << py(comparison.threshold) << "\" x2=\"" << w - right << "\" y2=\""
     << py(comparison.threshold) << "\" stroke=\"gray\" stroke-dasharray=\"6,4\"/>\n";
  for (std::size_t i = 0; i < comparison.campaigns.size(); ++i) {
    const auto& s = comparison.campaigns[i];
    const char* color = kColors[i % std::size(kColors)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t k = 0; k < s.running_best.size(); ++k) {
      if (!std::isfinite(s.running_best[k])) continue;
      os << px(double(k + 1)) << "," << py(s.running_best[k]) << " ";
    }
    os << "\"/>\n";
    double ly = top + 18.0 * double(i);
    os << "<line x1=\"" << w - right + 10 << "\" y1=\"" << ly << "\" x2=\"" << w - right + 30 << "\" y2=\"" << ly
       << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << w - right + 35 << "\" y=\"" << ly + 4 << "\" font-family=\"sans-serif\" font-size=\"12\">"
       << escape(s.name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace sciagent
