#pragma once
#include "cbl/agent_runtime.hpp"
#include "cbl/memory_bank.hpp"
#include "cbl/suite.hpp"
#include "cbl/task.hpp"
#include "cbl/trace.hpp"

#include <map>
#include <string>
#include <vector>

namespace cbl {

// Score one trace against its task's rubric and signals. A sample is
// successful iff the primary checkpoint is satisfied, at least three
// checkpoints hold, and nothing errored (aborted exit or any detected
// failure).
SampleScore score_sample(const TaskDefinition& task, const ExecutionTrace& trace,
                         const DetectorTable& detectors = {});

// Shared statistics over exactly 15 samples of one task.
struct TaskMetrics {
    double score_mean = 0.0;
    double success_rate = 0.0;
    double mean_time_ms = 0.0;
    double mean_tokens = 0.0;
    int error_count = 0;
    int sample_count = 0;
    std::map<std::string, double> signal_trigger_rates;
};

// Throws Error unless the protocol shape holds (rounds x variants samples).
TaskMetrics aggregate_metrics(const TaskDefinition& task, const std::vector<SampleScore>& scores,
                              const std::vector<ExecutionTrace>& traces);

struct MethodSummary {
    double score_mean = 0.0;
    double success_rate = 0.0;
    double mean_time_ms = 0.0;
    double mean_tokens = 0.0;
    int error_count = 0;
    int sample_count = 0;
};

// One method's pass over the whole suite.
struct ProtocolRun {
    std::string method;
    std::vector<std::pair<std::string, TaskMetrics>> per_task; // suite order
    MethodSummary summary;
};

// Run the 3x5 protocol for every task: samples execute in (round, variant)
// lexicographic order through the case loop. A task whose loop halts early
// is padded with errored zero-score samples so the 15-sample invariant
// holds and the failure shows up in error_count.
ProtocolRun run_protocol(const SuiteConfig& suite, Strategy strategy, Backend& backend,
                         const MemoryBank& bank0, int64_t budget_chars);

struct Provenance {
    std::string backend;
    std::string suite_hash;
    std::string fixture_hash;
};

struct BaselineRef {
    std::string method;
    double score_mean = 0.0;
    double success_rate = 0.0;
};

struct Delta {
    double score = 0.0;
    double success = 0.0;
};

struct EvalReport {
    Provenance provenance;
    std::vector<std::string> task_order;
    std::vector<ProtocolRun> runs;

    // Filled by compare().
    bool compared = false;
    std::string method = "cbl";
    std::map<std::string, BaselineRef> best_baseline;           // per task
    std::map<std::string, Delta> deltas;                        // per task, method - best baseline
    std::vector<std::pair<std::string, Delta>> group_deltas;    // structured/complex/open_ended
};

// Task grouping used for the complexity breakdown.
const std::vector<std::pair<std::string, std::vector<std::string>>>& task_groups();

// Compute best baseline, per-task deltas, and group deltas for the method
// run ("cbl"). Best baseline is the argmax by score_mean, ties broken by
// success_rate then by ascending method name. Throws MissingBaseline.
void compare(EvalReport& report);

std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& document);
std::string render_report_text(const EvalReport& report);

// ---- ablation ---------------------------------------------------------------

struct AblationRow {
    std::string condition; // full, drop-fact, ..., rule-memory
    double avg_score = 0.0;
    double success_rate = 0.0;
    int error_count = 0;
    std::map<std::string, double> signal_rates;
};

struct AblationReport {
    Provenance provenance;
    std::vector<std::string> diagnostics;
    std::vector<AblationRow> rows;
};

const std::vector<std::string>& ablation_condition_names();

// Run the diagnostic tasks once per condition: the full bundle, the bundle
// minus each module kind, and the RuleMemory strategy over the full bundle
// as the non-case baseline. Fixtures live at <fixture_dir>/<condition>.json.
AblationReport run_ablation(const SuiteConfig& suite, const std::string& bundle_document,
                            const std::vector<std::string>& diagnostics,
                            const std::string& fixture_dir, int64_t budget_chars);

std::string ablation_to_json(const AblationReport& report);
std::string render_ablation_text(const AblationReport& report);

} // namespace cbl
