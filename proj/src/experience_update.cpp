#include "cbl/experience_update.hpp"

#include "cbl/errors.hpp"
#include "cbl/text.hpp"

#include <algorithm>
#include <regex>

namespace cbl {

namespace {

bool payload_matches(const std::string& payload, const std::string& pattern) {
    std::regex re(pattern, std::regex::ECMAScript | std::regex::icase);
    return std::regex_search(payload, re);
}

// First event of the given kind whose payload matches; -1 if none.
int find_matching_event(const ExecutionTrace& trace, const std::string& kind,
                        const std::string& pattern) {
    for (const auto& ev : trace.events) {
        if (ev.kind == kind && payload_matches(ev.payload, pattern)) return ev.seq;
    }
    return -1;
}

int last_seq(const ExecutionTrace& trace) {
    return trace.events.empty() ? 0 : trace.events.back().seq;
}

// Seq of the event completing the first run of `threshold` consecutive
// call events with identical normalized payloads; -1 if no such run.
int find_loop(const ExecutionTrace& trace, int threshold) {
    int run = 0;
    std::string run_payload;
    for (const auto& ev : trace.events) {
        if (ev.kind != "model_call" && ev.kind != "tool_call") {
            run = 0;
            run_payload.clear();
            continue;
        }
        std::string norm = normalize_text(ev.payload);
        if (run > 0 && norm == run_payload) {
            ++run;
        } else {
            run = 1;
            run_payload = std::move(norm);
        }
        if (run >= threshold) return ev.seq;
    }
    return -1;
}

} // namespace

std::vector<FailureHit> classify_failures(const ExecutionTrace& trace, int64_t deadline_ms,
                                          const DetectorTable& detectors) {
    std::vector<FailureHit> hits;

    // Timeout: deadline exceeded, or an error event that says so.
    {
        int seq = find_matching_event(trace, "error", detectors.timeout_pattern);
        if (seq >= 0) {
            hits.push_back({FailureKind::timeout(), seq});
        } else if (deadline_ms > 0 && trace.duration_ms > deadline_ms) {
            hits.push_back({FailureKind::timeout(), last_seq(trace)});
        }
    }
    {
        int seq = find_matching_event(trace, "error", detectors.runtime_error_pattern);
        if (seq >= 0) hits.push_back({FailureKind::runtime_error(), seq});
    }
    {
        int seq = find_matching_event(trace, "validation", detectors.schema_failure_pattern);
        if (seq >= 0) hits.push_back({FailureKind::schema_validation_failure(), seq});
    }
    {
        int seq = find_loop(trace, detectors.loop_threshold);
        if (seq >= 0) hits.push_back({FailureKind::loop_detected(), seq});
    }
    if (trace.exit == ExitStatus::Completed && normalize_text(trace.final_output).empty()) {
        int seq = last_seq(trace);
        for (const auto& ev : trace.events) {
            if (ev.kind == "output") {
                seq = ev.seq;
                break;
            }
        }
        hits.push_back({FailureKind::blank_output(), seq});
    }
    for (const auto& custom : detectors.custom) {
        int seq = find_matching_event(trace, custom.event_kind, custom.pattern);
        if (seq >= 0) hits.push_back({FailureKind::other(custom.label), seq});
    }
    return hits;
}

ConstraintTemplates ConstraintTemplates::defaults() {
    ConstraintTemplates t;
    t.text_by_kind = {
        {"timeout",
         "Budget each step against the task deadline; if completion is at risk, return the best "
         "partial result before timing out."},
        {"runtime_error",
         "Guard risky operations and validate inputs before executing them; surface errors with "
         "actionable context instead of crashing."},
        {"blank_output",
         "Never return an empty answer; state assumptions and produce the best structured "
         "response available."},
        {"loop_detected", "Terminate after N identical consecutive calls; change strategy or stop."},
        {"schema_validation_failure",
         "After a schema validation failure, field formats should be rechecked against the "
         "expected output schema before emitting."},
        {"other", "Review the '%LABEL%' failure and add a targeted safeguard before retrying."},
    };
    return t;
}

std::string ConstraintTemplates::text_for(const FailureKind& kind) const {
    std::string key = kind.tag == FailureTag::Other ? "other" : kind.slug();
    auto it = text_by_kind.find(key);
    if (it == text_by_kind.end()) {
        throw ConfigError("no constraint template for failure kind: " + key);
    }
    std::string text = it->second;
    if (kind.tag == FailureTag::Other) {
        auto pos = text.find("%LABEL%");
        if (pos != std::string::npos) text.replace(pos, 7, kind.label);
    }
    return text;
}

ConstraintRule synthesize_constraint(const FailureKind& kind, const std::string& task_category,
                                     const ConstraintTemplates& templates, int64_t created_at) {
    if (kind.tag == FailureTag::Other && normalize_text(kind.label).empty()) {
        throw MalformedEntry("cannot synthesize a constraint for an unlabeled Other failure");
    }
    return make_constraint(templates.text_for(kind), {task_category}, kind, "phi", created_at);
}

std::vector<SkillTemplate> extract_skills(const ExecutionTrace& trace,
                                          const SampleScore& rubric_result,
                                          const std::vector<Checkpoint>& rubric,
                                          const std::string& task_category) {
    (void)trace;
    if (!rubric_result.success) return {};
    std::vector<SkillTemplate> out;
    for (const auto& cp : rubric) {
        if (cp.skill_name.empty()) continue;
        bool satisfied = std::find(rubric_result.satisfied.begin(), rubric_result.satisfied.end(),
                                   cp.id) != rubric_result.satisfied.end();
        if (!satisfied) continue;
        out.push_back(make_skill(cp.skill_name, cp.skill_steps, {task_category}));
    }
    return out;
}

std::string make_case_summary(const ExecutionTrace& trace, const SampleScore& rubric_result,
                              const std::vector<FailureHit>& failures) {
    std::string summary = trace.task_category + " sample " + trace.case_id + ": score " +
                          std::to_string(rubric_result.score) + "/4, " +
                          (rubric_result.success ? "succeeded" : "failed");
    if (!failures.empty()) {
        std::vector<std::string> slugs;
        slugs.reserve(failures.size());
        for (const auto& f : failures) slugs.push_back(f.kind.slug());
        summary += "; failures: " + join(slugs, ", ");
    }
    return summary;
}

std::pair<MemoryBank, UpdateDelta> apply_phi(MemoryBank bank, const ExecutionTrace& trace,
                                             const SampleScore& rubric_result,
                                             const TaskDefinition& task,
                                             const PhiOptions& options) {
    validate_trace(trace);
    if (bank_has_case(bank, trace.case_id)) {
        throw DuplicateCase("case already recorded: " + trace.case_id);
    }

    UpdateDelta delta;
    auto failures = classify_failures(trace, task.deadline_ms, options.detectors);
    for (const auto& hit : failures) delta.failures.push_back(hit.kind);

    for (const auto& hit : failures) {
        auto rule = synthesize_constraint(hit.kind, task.category_id, options.templates,
                                          trace.started_at_ms);
        bool changed = false;
        std::tie(bank, changed) = add_entry(std::move(bank), rule);
        if (changed) delta.new_constraints.push_back(rule.id);
    }
    if (options.reflective_summarizer) {
        for (const auto& rule : options.reflective_summarizer(trace)) {
            bool changed = false;
            std::tie(bank, changed) = add_entry(std::move(bank), rule);
            if (changed) delta.new_constraints.push_back(rule.id);
        }
    }

    for (const auto& skill : extract_skills(trace, rubric_result, task.rubric, task.category_id)) {
        bool changed = false;
        std::tie(bank, changed) = add_entry(std::move(bank), skill);
        if (changed) delta.new_skills.push_back(skill.id);
    }

    CaseRecord rec;
    rec.case_id = trace.case_id;
    rec.task_category = trace.task_category;
    rec.summary = make_case_summary(trace, rubric_result, failures);
    rec.difficulty = estimate_difficulty(trace, rubric_result, failures.size(), task.deadline_ms,
                                         options.weights);
    rec.success = rubric_result.success;
    rec.score = rubric_result.score;
    rec.duration_ms = trace.duration_ms;
    for (const auto& hit : failures) rec.failure_kinds.push_back(hit.kind);
    rec.created_at = trace.started_at_ms;

    bool changed = false;
    std::tie(bank, changed) = add_entry(std::move(bank), rec);
    delta.case_recorded = rec;
    return {std::move(bank), std::move(delta)};
}

} // namespace cbl
