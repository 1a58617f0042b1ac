#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gomp::cli {

struct Aggregate {
  double mean{0.0};
  double stdev{0.0};  ///< sample standard deviation; 0 for fewer than two values
  double min{0.0};
  double max{0.0};
  int count{0};
};

Aggregate aggregate(const std::vector<double>& values);

/// One grasp of a compare run.
struct ReportRow {
  std::string scene;
  int grasp_index{0};
  std::string object_id;
  std::string status;  ///< "ok" or the failure reason
  double duration_s{0.0};
  int horizons_tried{0};
  double wall_ms{0.0};
  bool has_baseline{false};
  double baseline_s{0.0};
  double speedup{0.0};  ///< baseline_s / duration_s
  bool ok() const { return status == "ok"; }
};

struct RunReport {
  std::vector<ReportRow> rows;
  Aggregate gomp;
  Aggregate baseline;
  Aggregate speedup;  ///< over per-row ratios
  double speedup_of_means{0.0};

  /// Recomputes the aggregates from the successful rows.
  void finalize();
  std::string to_json() const;
  static RunReport from_json(const std::string& text);
  /// Summary table: mean / stdev / min / max of baseline, GOMP and speedup.
  void print_table(std::ostream& os) const;
};

/// Per-object grasp selection.
struct ObjectSelection {
  std::string object_id;
  std::vector<int> grasp_indices;
  std::vector<double> durations;  ///< parallel to grasp_indices; NaN for failures
  double min{0.0};
  double mean{0.0};
  double max{0.0};
  int selected_index{-1};
  double selected_duration{0.0};
};

struct SelectReport {
  std::string scene;
  std::vector<ObjectSelection> objects;

  std::string to_json() const;
  static SelectReport from_json(const std::string& text);
  void print_table(std::ostream& os) const;
};

}  // namespace gomp::cli
