#pragma once
#include "cbl/memory_bank.hpp"
#include "cbl/task.hpp"
#include "cbl/trace.hpp"

#include <map>
#include <string>
#include <vector>

namespace cbl {

// Difficulty estimator weights. Overridable through the suite configuration.
struct CurriculumWeights {
    double failure_weight = 0.4;
    double score_weight = 0.3;
    double duration_weight = 0.3;
};

// difficulty = clamp01( failure_weight * failure_count/5
//                     + score_weight   * (1 - score/4)
//                     + duration_weight* min(duration/deadline, 1) )
// failure_count is the number of standardized failures classify_failures
// detected on the trace; the update function passes it through.
double estimate_difficulty(const ExecutionTrace& trace, const SampleScore& rubric_result,
                           size_t failure_count, int64_t deadline_ms,
                           const CurriculumWeights& weights = {});

struct CurriculumKey {
    double difficulty = 0.0;
    int success_rank = 0; // 0 for successes, 1 for failures

    bool operator==(const CurriculumKey&) const = default;
};

// Easier-first injection order: ascending difficulty, successes before
// failures, then ascending created_at, then ascending case_id.
struct CurriculumOrder {
    std::vector<std::string> ordered_case_ids;
    std::map<std::string, CurriculumKey> key_of;
};

CurriculumOrder order_cases(const std::vector<CaseRecord>& cases);

// One-line rendering of a case used for context bodies and budget math.
std::string render_case_summary(const CaseRecord& rec);

// Greedy prefix of the order whose rendered summaries fit within
// budget_chars. A summary is never split; selection stops at the first
// summary that does not fit.
std::vector<CaseRecord> select_for_context(const CurriculumOrder& order,
                                           const std::vector<CaseRecord>& cases,
                                           int64_t budget_chars);

} // namespace cbl
