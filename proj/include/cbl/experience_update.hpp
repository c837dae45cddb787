#pragma once
#include "cbl/curriculum.hpp"
#include "cbl/failure.hpp"
#include "cbl/memory_bank.hpp"
#include "cbl/task.hpp"
#include "cbl/trace.hpp"

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace cbl {

// Versioned detector table. Patterns are ECMAScript regexes evaluated
// case-insensitively against event payloads; changing them changes what the
// golden trace corpus classifies, so bump `version` alongside any edit.
struct DetectorTable {
    int version = 1;
    std::string timeout_pattern = "timed? ?out";
    std::string runtime_error_pattern = "(exception|traceback|panic|runtime error)";
    std::string schema_failure_pattern = "(schema|format).*(fail|invalid)";
    int loop_threshold = 3; // identical consecutive calls that count as a loop

    // Extra suite-defined detectors, classified as Other(label). Evaluated
    // after the five standard detectors, in declaration order.
    struct CustomDetector {
        std::string label;
        std::string event_kind;
        std::string pattern;
    };
    std::vector<CustomDetector> custom;
};

// Fixed constraint text per failure kind. The schema entry must keep the
// phrase "field formats should be rechecked"; fixture tests freeze all of
// these strings.
struct ConstraintTemplates {
    std::map<std::string, std::string> text_by_kind; // key: FailureKind slug ("other" for Other)

    static ConstraintTemplates defaults();
    std::string text_for(const FailureKind& kind) const;
};

struct FailureHit {
    FailureKind kind;
    int seq = 0; // event that triggered the detector
};

// Deterministic detector pipeline, fixed order:
// Timeout -> RuntimeError -> SchemaValidationFailure -> LoopDetected ->
// BlankOutput -> custom (Other). Each detector fires at most once.
std::vector<FailureHit> classify_failures(const ExecutionTrace& trace, int64_t deadline_ms,
                                          const DetectorTable& detectors = {});

// Behavioral rule for one failure kind, drawn from the template table and
// tagged with the task category. Same (kind, category) always yields the
// same rule id.
ConstraintRule synthesize_constraint(const FailureKind& kind, const std::string& task_category,
                                     const ConstraintTemplates& templates = ConstraintTemplates::defaults(),
                                     int64_t created_at = 0);

// Skills come only from successes: one template per satisfied checkpoint
// that declares a skill. Failed samples yield nothing.
std::vector<SkillTemplate> extract_skills(const ExecutionTrace& trace,
                                          const SampleScore& rubric_result,
                                          const std::vector<Checkpoint>& rubric,
                                          const std::string& task_category);

struct UpdateDelta {
    std::vector<std::string> new_facts; // always empty: the update never writes facts
    std::vector<std::string> new_constraints;
    std::vector<std::string> new_skills; // added or validation-incremented
    CaseRecord case_recorded;
    std::vector<FailureKind> failures;
};

struct PhiOptions {
    DetectorTable detectors;
    ConstraintTemplates templates = ConstraintTemplates::defaults();
    CurriculumWeights weights;
    // Hook point for a model-driven lesson summarizer. Left unset, the
    // update stays fully symbolic. Returned rules are added to the
    // constraint store after the template-synthesized ones.
    std::function<std::vector<ConstraintRule>(const ExecutionTrace&)> reflective_summarizer;
};

// The memory update function: classify failures, synthesize constraints,
// extract skills, record the case. Facts are never touched. Throws
// DuplicateCase when the trace's case id is already recorded.
std::pair<MemoryBank, UpdateDelta> apply_phi(MemoryBank bank, const ExecutionTrace& trace,
                                             const SampleScore& rubric_result,
                                             const TaskDefinition& task,
                                             const PhiOptions& options = {});

// Human-readable one-liner stored on the case record.
std::string make_case_summary(const ExecutionTrace& trace, const SampleScore& rubric_result,
                              const std::vector<FailureHit>& failures);

} // namespace cbl
