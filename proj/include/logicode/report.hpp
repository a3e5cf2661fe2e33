#pragma once

#include <optional>
#include <string>
#include <vector>

#include "logicode/common.hpp"

namespace logicode {

enum class Prediction { Normal, Abnormal, EvaluationFailed };

inline std::string_view to_string(Prediction p) {
  switch (p) {
    case Prediction::Normal: return "normal";
    case Prediction::Abnormal: return "abnormal";
    case Prediction::EvaluationFailed: return "evaluation_failed";
  }
  return "?";
}

inline std::optional<Prediction> parse_prediction(std::string_view s) {
  if (s == "normal") return Prediction::Normal;
  if (s == "abnormal") return Prediction::Abnormal;
  if (s == "evaluation_failed") return Prediction::EvaluationFailed;
  return std::nullopt;
}

/// Per-image verdict: the (abnormal, reasons) pair plus diagnostics.
struct AnalysisReport {
  std::string image_id;
  Prediction predicted = Prediction::Normal;
  std::vector<std::string> reasons;
  std::vector<std::string> warnings;
  std::string error;  // set iff predicted == EvaluationFailed
  double fact_ms = 0;
  double eval_ms = 0;

  bool abnormal() const { return predicted == Prediction::Abnormal; }
  std::string reason_string() const { return join(reasons, "; "); }

  /// Timings are left out unless asked for so that report files stay
  /// byte-identical across runs.
  Json to_json(bool with_timings = false) const {
    Json j = {{"image_id", image_id},
              {"predicted", to_string(predicted)},
              {"reasons", reasons},
              {"reason_string", reason_string()}};
    if (!warnings.empty()) j["warnings"] = warnings;
    if (!error.empty()) j["error"] = error;
    if (with_timings) j["timings"] = {{"fact_build_ms", fact_ms}, {"evaluate_ms", eval_ms}};
    return j;
  }

  static AnalysisReport from_json(const Json& j) {
    AnalysisReport r;
    try {
      r.image_id = j.at("image_id").get<std::string>();
      auto p = parse_prediction(j.at("predicted").get<std::string>());
      if (!p) throw SchemaError("report '" + r.image_id + "': bad predicted value");
      r.predicted = *p;
      r.reasons = j.at("reasons").get<std::vector<std::string>>();
      if (j.contains("warnings")) r.warnings = j["warnings"].get<std::vector<std::string>>();
      if (j.contains("error")) r.error = j["error"].get<std::string>();
      if (j.contains("timings")) {
        r.fact_ms = j["timings"].value("fact_build_ms", 0.0);
        r.eval_ms = j["timings"].value("evaluate_ms", 0.0);
      }
    } catch (const Json::exception& e) {
      throw SchemaError(std::string("malformed analysis report: ") + e.what());
    }
    return r;
  }
};

}  // namespace logicode
