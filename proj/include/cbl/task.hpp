#pragma once
#include "cbl/memory_bank.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cbl {

// Deterministic matching rule over the folded (lowercased, space-collapsed)
// output text: either "any of these keywords occurs" or a case-insensitive
// regex search.
struct MatchRule {
    enum class Type { KeywordAny, Regex };
    Type type = Type::KeywordAny;
    std::vector<std::string> keywords;
    std::string pattern;

    bool matches(const std::string& folded_output) const;

    static MatchRule keyword_any(std::vector<std::string> keywords);
    static MatchRule regex(std::string pattern);
};

// One binary rubric checkpoint. Exactly one checkpoint per rubric is
// primary. A checkpoint may declare a skill template that successful
// samples satisfying it contribute to the skill library.
struct Checkpoint {
    std::string id;
    MatchRule pattern;
    bool primary = false;
    std::string skill_name;               // empty: no skill mapping
    std::vector<std::string> skill_steps; // suite-configured method steps
};

// Named behavioral detector whose trigger rate diagnoses which memory
// module protects which behavior.
struct SignalSpec {
    std::string id;
    MatchRule pattern;
    std::string task_category;
};

// Output validator run by the runtime after each completion. A failing
// validator emits a "validation" trace event whose payload the schema
// failure detector recognizes.
struct ValidatorSpec {
    std::string id;
    std::vector<std::string> required_any; // folded markers, at least one must occur
    std::string message;                   // appended to the failure payload
};

struct TaskDefinition {
    std::string category_id;
    std::string description;
    std::vector<std::string> tags;
    int64_t deadline_ms = 60000;
    std::vector<Checkpoint> rubric; // exactly 4, one primary
    std::vector<SignalSpec> signals;
    std::vector<ValidatorSpec> validators;
    std::vector<std::string> checklist_steps;
    std::vector<std::string> prompt_variants; // exactly 5
    int rounds = 3;

    const Checkpoint* find_checkpoint(const std::string& id) const;
    const Checkpoint& primary_checkpoint() const;
};

// Throws ConfigError unless the protocol shape holds: 5 variants, 3 rounds,
// a 4-checkpoint rubric with exactly one primary.
void validate_task(const TaskDefinition& task);

// One (round, variant) evaluation instance of a task.
struct TaskSample {
    std::string sample_id; // "<category>/r<round>v<variant>"
    std::string category_id;
    int round = 1;
    int variant = 1;
    std::string prompt_text;
};

// The 15 samples of one task in (round, variant) lexicographic order.
std::vector<TaskSample> make_samples(const TaskDefinition& task);
std::string sample_id_for(const std::string& category_id, int round, int variant);

struct SampleScore {
    std::string sample_id;
    int score = 0; // count of satisfied checkpoints
    bool success = false;
    std::vector<std::string> satisfied;
    std::vector<std::string> signals_fired;
    bool errored = false;
};

} // namespace cbl
