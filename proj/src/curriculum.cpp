#include "cbl/curriculum.hpp"

#include <algorithm>
#include <cstdio>
#include <unordered_map>

namespace cbl {

double estimate_difficulty(const ExecutionTrace& trace, const SampleScore& rubric_result,
                           size_t failure_count, int64_t deadline_ms,
                           const CurriculumWeights& weights) {
    double failure_term = static_cast<double>(failure_count) / 5.0;
    double score_term = 1.0 - static_cast<double>(rubric_result.score) / 4.0;
    double duration_ratio =
        deadline_ms > 0
            ? std::min(static_cast<double>(trace.duration_ms) / static_cast<double>(deadline_ms),
                       1.0)
            : 1.0;
    double d = weights.failure_weight * failure_term + weights.score_weight * score_term +
               weights.duration_weight * duration_ratio;
    return std::clamp(d, 0.0, 1.0);
}

CurriculumOrder order_cases(const std::vector<CaseRecord>& cases) {
    struct Row {
        CurriculumKey key;
        int64_t created_at;
        const CaseRecord* rec;
    };
    std::vector<Row> rows;
    rows.reserve(cases.size());
    for (const auto& c : cases) {
        rows.push_back({{c.difficulty, c.success ? 0 : 1}, c.created_at, &c});
    }
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        if (a.key.difficulty != b.key.difficulty) return a.key.difficulty < b.key.difficulty;
        if (a.key.success_rank != b.key.success_rank) return a.key.success_rank < b.key.success_rank;
        if (a.created_at != b.created_at) return a.created_at < b.created_at;
        return a.rec->case_id < b.rec->case_id;
    });
    CurriculumOrder order;
    order.ordered_case_ids.reserve(rows.size());
    for (const auto& r : rows) {
        order.ordered_case_ids.push_back(r.rec->case_id);
        order.key_of[r.rec->case_id] = r.key;
    }
    return order;
}

std::string render_case_summary(const CaseRecord& rec) {
    char head[64];
    std::snprintf(head, sizeof(head), "(d=%.2f, %s, %d/4) ", rec.difficulty,
                  rec.success ? "ok" : "failed", rec.score);
    return "- " + std::string(head) + rec.summary;
}

std::vector<CaseRecord> select_for_context(const CurriculumOrder& order,
                                           const std::vector<CaseRecord>& cases,
                                           int64_t budget_chars) {
    std::unordered_map<std::string, const CaseRecord*> by_id;
    by_id.reserve(cases.size());
    for (const auto& c : cases) by_id.emplace(c.case_id, &c);

    std::vector<CaseRecord> out;
    int64_t used = 0;
    for (const auto& id : order.ordered_case_ids) {
        auto it = by_id.find(id);
        if (it == by_id.end()) continue;
        // One newline joins consecutive summaries in the rendered body.
        int64_t cost = static_cast<int64_t>(render_case_summary(*it->second).size()) +
                       (out.empty() ? 0 : 1);
        if (used + cost > budget_chars) break;
        used += cost;
        out.push_back(*it->second);
    }
    return out;
}

} // namespace cbl
