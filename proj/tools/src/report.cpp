#include "gomp_cli/report.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>

#include <nlohmann/json.hpp>

#include "gomp/errors.hpp"

namespace gomp::cli {

using nlohmann::json;

Aggregate aggregate(const std::vector<double>& values) {
  Aggregate a;
  a.count = static_cast<int>(values.size());
  if (values.empty()) return a;
  a.mean = std::accumulate(values.begin(), values.end(), 0.0) / a.count;
  a.min = *std::min_element(values.begin(), values.end());
  a.max = *std::max_element(values.begin(), values.end());
  if (a.count > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    a.stdev = std::sqrt(ss / (a.count - 1));
  }
  return a;
}

namespace {

json agg_json(const Aggregate& a) {
  return {{"mean", a.mean}, {"stdev", a.stdev}, {"min", a.min}, {"max", a.max}, {"count", a.count}};
}

Aggregate agg_from(const json& j) {
  return {j.at("mean").get<double>(), j.at("stdev").get<double>(), j.at("min").get<double>(),
          j.at("max").get<double>(), j.at("count").get<int>()};
}

// JSON has no NaN; failed entries are written as null.
json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double number_from(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace

void RunReport::finalize() {
  std::vector<double> g, b, s;
  for (const auto& r : rows) {
    if (!r.ok()) continue;
    g.push_back(r.duration_s);
    if (r.has_baseline) {
      b.push_back(r.baseline_s);
      s.push_back(r.speedup);
    }
  }
  gomp = aggregate(g);
  baseline = aggregate(b);
  speedup = aggregate(s);
  speedup_of_means = gomp.mean > 0 && baseline.count > 0 ? baseline.mean / gomp.mean : 0.0;
}

std::string RunReport::to_json() const {
  json rs = json::array();
  for (const auto& r : rows) {
    json e = {{"scene", r.scene},
              {"grasp_index", r.grasp_index},
              {"object_id", r.object_id},
              {"status", r.status},
              {"duration_s", r.duration_s},
              {"horizons_tried", r.horizons_tried},
              {"wall_ms", r.wall_ms}};
    if (r.has_baseline) {
      e["baseline_s"] = r.baseline_s;
      e["speedup"] = r.speedup;
    }
    rs.push_back(std::move(e));
  }
  return json{{"rows", rs},
              {"aggregates",
               {{"gomp", agg_json(gomp)},
                {"baseline", agg_json(baseline)},
                {"speedup", agg_json(speedup)},
                {"speedup_of_means", speedup_of_means}}}}
      .dump(2);
}

RunReport RunReport::from_json(const std::string& text) {
  RunReport rep;
  try {
    const json j = json::parse(text);
    for (const auto& e : j.at("rows")) {
      ReportRow r;
      r.scene = e.value("scene", std::string());
      r.grasp_index = e.at("grasp_index").get<int>();
      r.object_id = e.value("object_id", std::string());
      r.status = e.at("status").get<std::string>();
      r.duration_s = e.at("duration_s").get<double>();
      r.horizons_tried = e.value("horizons_tried", 0);
      r.wall_ms = e.value("wall_ms", 0.0);
      if (e.contains("baseline_s")) {
        r.has_baseline = true;
        r.baseline_s = e.at("baseline_s").get<double>();
        r.speedup = e.at("speedup").get<double>();
      }
      rep.rows.push_back(std::move(r));
    }
    const json& a = j.at("aggregates");
    rep.gomp = agg_from(a.at("gomp"));
    rep.baseline = agg_from(a.at("baseline"));
    rep.speedup = agg_from(a.at("speedup"));
    rep.speedup_of_means = a.at("speedup_of_means").get<double>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("report: ") + e.what());
  }
  return rep;
}

void RunReport::print_table(std::ostream& os) const {
  const auto flags = os.flags();
  os << std::fixed << std::setprecision(3);
  os << std::left << std::setw(30) << "scene" << std::right << std::setw(6) << "grasp" << std::setw(12)
     << "baseline_s" << std::setw(10) << "gomp_s" << std::setw(9) << "speedup" << "  status\n";
  for (const auto& r : rows) {
    os << std::left << std::setw(30) << r.scene << std::right << std::setw(6) << r.grasp_index;
    if (r.has_baseline) os << std::setw(12) << r.baseline_s;
    else os << std::setw(12) << "-";
    if (r.ok()) os << std::setw(10) << r.duration_s;
    else os << std::setw(10) << "-";
    if (r.ok() && r.has_baseline) os << std::setw(8) << std::setprecision(2) << r.speedup << "x" << std::setprecision(3);
    else os << std::setw(9) << "-";
    os << "  " << r.status << '\n';
  }
  os << '\n' << std::left << std::setw(8) << "" << std::right << std::setw(12) << "Baseline" << std::setw(12)
     << "GOMP" << std::setw(12) << "Speedup" << '\n';
  auto line = [&](const char* name, double b, double g, double s) {
    os << std::left << std::setw(8) << name << std::right << std::setw(12) << b << std::setw(12) << g
       << std::setw(11) << std::setprecision(2) << s << "x" << std::setprecision(3) << '\n';
  };
  line("Mean", baseline.mean, gomp.mean, speedup_of_means);
  os << std::left << std::setw(8) << "Stdev" << std::right << std::setw(12) << baseline.stdev << std::setw(12)
     << gomp.stdev << '\n';
  // Min/max rows divide the aggregates; per-row ratios are reported below.
  line("Min", baseline.min, gomp.min, gomp.min > 0 ? baseline.min / gomp.min : 0.0);
  line("Max", baseline.max, gomp.max, gomp.max > 0 ? baseline.max / gomp.max : 0.0);
  os << "per-row speedup: mean " << std::setprecision(2) << speedup.mean << "x, min " << speedup.min
     << "x, max " << speedup.max << "x over " << speedup.count << " rows\n";
  os.flags(flags);
}

std::string SelectReport::to_json() const {
  json objs = json::array();
  for (const auto& o : objects) {
    json d = json::array();
    for (double v : o.durations) d.push_back(number_or_null(v));
    objs.push_back({{"object_id", o.object_id},
                    {"grasp_indices", o.grasp_indices},
                    {"durations_s", d},
                    {"min_s", o.min},
                    {"mean_s", o.mean},
                    {"max_s", o.max},
                    {"selected_grasp", o.selected_index},
                    {"selected_duration_s", o.selected_duration}});
  }
  return json{{"scene", scene}, {"objects", objs}}.dump(2);
}

SelectReport SelectReport::from_json(const std::string& text) {
  SelectReport rep;
  try {
    const json j = json::parse(text);
    rep.scene = j.value("scene", std::string());
    for (const auto& e : j.at("objects")) {
      ObjectSelection o;
      o.object_id = e.at("object_id").get<std::string>();
      o.grasp_indices = e.at("grasp_indices").get<std::vector<int>>();
      for (const auto& d : e.at("durations_s")) o.durations.push_back(number_from(d));
      o.min = e.at("min_s").get<double>();
      o.mean = e.at("mean_s").get<double>();
      o.max = e.at("max_s").get<double>();
      o.selected_index = e.at("selected_grasp").get<int>();
      o.selected_duration = e.at("selected_duration_s").get<double>();
      rep.objects.push_back(std::move(o));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("select report: ") + e.what());
  }
  return rep;
}

void SelectReport::print_table(std::ostream& os) const {
  const auto flags = os.flags();
  os << std::fixed << std::setprecision(3);
  os << std::left << std::setw(16) << "object" << std::right << std::setw(8) << "grasps" << std::setw(10)
     << "min_s" << std::setw(10) << "mean_s" << std::setw(10) << "max_s" << std::setw(10) << "selected" << '\n';
  for (const auto& o : objects) {
    os << std::left << std::setw(16) << o.object_id << std::right << std::setw(8) << o.grasp_indices.size()
       << std::setw(10) << o.min << std::setw(10) << o.mean << std::setw(10) << o.max << std::setw(10)
       << o.selected_index << '\n';
  }
  os.flags(flags);
}

}  // namespace gomp::cli
