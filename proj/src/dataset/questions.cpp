#include <set>

#include "dqa/dataset.hpp"
#include "dqa/errors.hpp"
#include "dqa/file_io.hpp"
#include "json_util.hpp"

namespace dqa {

const std::vector<TcfdQuestion>& tcfd_questions() {
  static const std::vector<TcfdQuestion> questions = {
      {1, "Does the organization describe the board's oversight of climate-related risks and / or opportunities?"},
      {2, "Does the organization describe management's role in assessing and managing climate-related risks and/or "
          "opportunities?"},
      {3, "Does the organization describe the climate-related risks or opportunities the organization has identified?"},
      {4, "Does the organization describe time frames (short, medium, or long term) associated with its "
          "climate-related risks or opportunities?"},
      {5, "Does the organization describe the impact of climate-related risks and opportunities on the organization?"},
      {6, "Does the organization describe the resilience of its strategy, taking into consideration different "
          "climate-related scenarios, including a potential future state aligned with the Paris Agreement?"},
      {7, "Does the organization disclose the use of a 2C scenario in evaluating strategy or financial planning, or "
          "for other business purposes?"},
      {8, "Does the organization describe the organization's processes for identifying and/or assessing "
          "climate-related risks?"},
      {9, "Does the organization describe the organization's processes for managing climate-related risks?"},
      {10, "Does the organization describe how processes for identifying, assessing, and managing climate-related "
           "risks are integrated into the organization's overall risk management?"},
      {11, "Does the organization disclose the metrics it uses to assess climate-related risks and/or opportunities?"},
      {12, "Does the organization disclose Scope 1 and Scope 2, and, if appropriate Scope 3 GHG emissions?"},
      {13, "Does the organization describe the targets it uses to manage climate-related risks and/or opportunities?"},
      {14, "Does the organization describe its performance related to those targets (referenced in question 13)?"},
  };
  return questions;
}

std::vector<TcfdQuestion> parse_questions(std::string_view text) {
  const nlohmann::json j = detail::parse_json(text, "questions");
  if (!j.is_array()) throw SchemaError("questions: expected a JSON array");
  std::vector<TcfdQuestion> out;
  std::set<int> seen;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string where = "questions[" + std::to_string(i) + "]";
    const auto& q = j[i];
    if (!q.is_object()) throw SchemaError(where + ": expected an object");
    TcfdQuestion tq;
    tq.qid = detail::get_int(q, "qid", where);
    tq.text = detail::get_string(q, "text", where);
    if (tq.qid < 1 || tq.qid > kNumQuestions) {
      throw SchemaError(where + ".qid: " + std::to_string(tq.qid) + " is outside 1.." + std::to_string(kNumQuestions));
    }
    if (!seen.insert(tq.qid).second) throw SchemaError(where + ".qid: duplicate qid " + std::to_string(tq.qid));
    out.push_back(std::move(tq));
  }
  return out;
}

std::vector<TcfdQuestion> load_questions(const std::filesystem::path& path) { return parse_questions(read_file(path)); }

}  // namespace dqa
