#pragma once
#include "cbl/memory_bank.hpp"
#include "cbl/suite.hpp"
#include "cbl/task.hpp"

#include <string>
#include <utility>
#include <vector>

namespace cbl {

enum class StrategyKind { Cbl, ZeroShot, FewShot, Checklist, RuleMemory };

// Context-assembly policy: the case-based method or one of the four
// baselines. few_shot_k matters only for FewShot.
struct Strategy {
    StrategyKind kind = StrategyKind::Cbl;
    int few_shot_k = 3;

    static Strategy cbl() { return {StrategyKind::Cbl, 3}; }
    static Strategy zero_shot() { return {StrategyKind::ZeroShot, 3}; }
    static Strategy few_shot(int k = 3) { return {StrategyKind::FewShot, k}; }
    static Strategy checklist() { return {StrategyKind::Checklist, 3}; }
    static Strategy rule_memory() { return {StrategyKind::RuleMemory, 3}; }

    std::string slug() const; // "cbl", "zero-shot", "few-shot", "checklist", "rule-memory"
    static Strategy from_slug(const std::string& slug, int few_shot_k = 3);

    bool operator==(const Strategy&) const = default;
};

// All five method slugs in report order (method first, then baselines).
const std::vector<std::string>& all_strategy_slugs();

// Assembled, sectioned context ready for rendering. char_count counts the
// section bodies plus the task text; section labels are layout overhead.
struct PromptContext {
    std::vector<std::pair<std::string, std::string>> sections; // (label, body)
    std::string task_text;
    Strategy strategy;
    int64_t char_count = 0;
};

// Tag-overlap relevance: |intersection| / max(1, |union|) over normalized
// tag sets. Symmetric, in [0,1].
double score_relevance(const std::vector<std::string>& entry_tags,
                       const std::vector<std::string>& task_tags);

// Build the context for one sample under a strategy. Strategies read only
// their declared stores: ZeroShot none, FewShot cases, Checklist suite
// config, RuleMemory constraints, CBL all four. Throws BudgetTooSmall when
// budget_chars cannot hold the task text.
PromptContext assemble(const MemoryBank& bank, const TaskDefinition& task,
                       const TaskSample& sample, Strategy strategy, int64_t budget_chars);

// Canonical textual layout: "## <LABEL>\n<body>\n\n" per section, then
// "## TASK\n<task text>". Byte-deterministic.
std::string render(const PromptContext& ctx);

} // namespace cbl
