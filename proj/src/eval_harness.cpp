#include "cbl/eval_harness.hpp"

#include "cbl/errors.hpp"
#include "cbl/text.hpp"
#include "cbl/transfer.hpp"

#include "json.hpp"

#include <algorithm>
#include <cstdio>

namespace cbl {

using ordered_json = nlohmann::ordered_json;

SampleScore score_sample(const TaskDefinition& task, const ExecutionTrace& trace,
                         const DetectorTable& detectors) {
    SampleScore s;
    s.sample_id = trace.case_id;
    const std::string folded = fold_text(trace.final_output);
    for (const auto& cp : task.rubric) {
        if (cp.pattern.matches(folded)) s.satisfied.push_back(cp.id);
    }
    for (const auto& sig : task.signals) {
        if (sig.pattern.matches(folded)) s.signals_fired.push_back(sig.id);
    }
    s.score = static_cast<int>(s.satisfied.size());

    auto failures = classify_failures(trace, task.deadline_ms, detectors);
    s.errored = trace.exit == ExitStatus::Aborted || !failures.empty();

    const std::string& primary_id = task.primary_checkpoint().id;
    bool primary_ok =
        std::find(s.satisfied.begin(), s.satisfied.end(), primary_id) != s.satisfied.end();
    s.success = primary_ok && s.score >= kSuccessScoreThreshold && !s.errored;
    return s;
}

TaskMetrics aggregate_metrics(const TaskDefinition& task, const std::vector<SampleScore>& scores,
                              const std::vector<ExecutionTrace>& traces) {
    const size_t expected =
        static_cast<size_t>(task.rounds) * task.prompt_variants.size();
    if (scores.size() != expected || traces.size() != expected) {
        throw Error("task " + task.category_id + " aggregates " + std::to_string(scores.size()) +
                    " samples, expected " + std::to_string(expected));
    }
    TaskMetrics m;
    m.sample_count = static_cast<int>(expected);
    int64_t score_sum = 0;
    int success_sum = 0;
    int64_t time_sum = 0;
    int64_t token_sum = 0;
    std::map<std::string, int> fired;
    for (const auto& sig : task.signals) fired[sig.id] = 0;
    for (size_t i = 0; i < expected; ++i) {
        score_sum += scores[i].score;
        success_sum += scores[i].success ? 1 : 0;
        m.error_count += scores[i].errored ? 1 : 0;
        time_sum += traces[i].duration_ms;
        token_sum += traces[i].tokens_in + traces[i].tokens_out;
        for (const auto& id : scores[i].signals_fired) {
            auto it = fired.find(id);
            if (it != fired.end()) it->second += 1;
        }
    }
    const double n = static_cast<double>(expected);
    m.score_mean = static_cast<double>(score_sum) / n;
    m.success_rate = static_cast<double>(success_sum) / n;
    m.mean_time_ms = static_cast<double>(time_sum) / n;
    m.mean_tokens = static_cast<double>(token_sum) / n;
    for (const auto& [id, count] : fired) {
        m.signal_trigger_rates[id] = static_cast<double>(count) / n;
    }
    return m;
}

namespace {

// Aborted placeholder for samples that never executed because the loop
// halted; keeps the 15-sample invariant and feeds error_count.
ExecutionTrace placeholder_trace(const TaskSample& sample, int64_t logical_start_ms,
                                 const std::string& reason) {
    ExecutionTrace t;
    t.case_id = sample.sample_id;
    t.task_category = sample.category_id;
    t.started_at_ms = logical_start_ms;
    t.events.push_back({0, "error", reason, 0});
    t.exit = ExitStatus::Aborted;
    return t;
}

struct PooledStats {
    int64_t score_sum = 0;
    int success_sum = 0;
    int64_t time_sum = 0;
    int64_t token_sum = 0;
    int error_count = 0;
    int count = 0;

    void add(const SampleScore& s, const ExecutionTrace& t) {
        score_sum += s.score;
        success_sum += s.success ? 1 : 0;
        error_count += s.errored ? 1 : 0;
        time_sum += t.duration_ms;
        token_sum += t.tokens_in + t.tokens_out;
        count += 1;
    }

    MethodSummary summary() const {
        MethodSummary s;
        s.sample_count = count;
        s.error_count = error_count;
        if (count > 0) {
            const double n = static_cast<double>(count);
            s.score_mean = static_cast<double>(score_sum) / n;
            s.success_rate = static_cast<double>(success_sum) / n;
            s.mean_time_ms = static_cast<double>(time_sum) / n;
            s.mean_tokens = static_cast<double>(token_sum) / n;
        }
        return s;
    }
};

} // namespace

ProtocolRun run_protocol(const SuiteConfig& suite, Strategy strategy, Backend& backend,
                         const MemoryBank& bank0, int64_t budget_chars) {
    ProtocolRun run;
    run.method = strategy.slug();
    PooledStats pooled;
    for (const auto& task : suite.tasks) {
        auto samples = make_samples(task);
        auto loop = run_case_loop(bank0, task, samples, strategy, backend, suite, budget_chars);

        std::vector<SampleScore> scores;
        std::vector<ExecutionTrace> traces;
        scores.reserve(samples.size());
        traces.reserve(samples.size());
        for (const auto& step : loop.steps) {
            scores.push_back(step.score);
            traces.push_back(step.trace);
        }
        for (size_t i = loop.steps.size(); i < samples.size(); ++i) {
            // Loop halted: remaining samples count as errored zero-score runs.
            SampleScore s;
            s.sample_id = samples[i].sample_id;
            s.errored = true;
            scores.push_back(s);
            traces.push_back(placeholder_trace(samples[i], static_cast<int64_t>(i), loop.error));
        }
        TaskMetrics metrics = aggregate_metrics(task, scores, traces);
        for (size_t i = 0; i < scores.size(); ++i) pooled.add(scores[i], traces[i]);
        run.per_task.emplace_back(task.category_id, std::move(metrics));
    }
    run.summary = pooled.summary();
    return run;
}

const std::vector<std::pair<std::string, std::vector<std::string>>>& task_groups() {
    static const std::vector<std::pair<std::string, std::vector<std::string>>> groups = {
        {"structured", {"tool_orchestration", "rlhf_training", "enterprise_rag"}},
        {"complex", {"long_horizon_ops", "preference_drift"}},
        {"open_ended", {"multiagent_discovery"}},
    };
    return groups;
}

namespace {

const TaskMetrics* find_metrics(const ProtocolRun& run, const std::string& task) {
    for (const auto& [id, metrics] : run.per_task) {
        if (id == task) return &metrics;
    }
    return nullptr;
}

} // namespace

void compare(EvalReport& report) {
    const ProtocolRun* method_run = nullptr;
    for (const auto& run : report.runs) {
        if (run.method == report.method) method_run = &run;
    }
    if (!method_run) throw MissingBaseline("report has no '" + report.method + "' run to compare");

    report.best_baseline.clear();
    report.deltas.clear();
    report.group_deltas.clear();

    for (const auto& task : report.task_order) {
        const TaskMetrics* mine = find_metrics(*method_run, task);
        if (!mine) throw MissingBaseline("method run lacks task " + task);

        const ProtocolRun* best = nullptr;
        const TaskMetrics* best_metrics = nullptr;
        for (const auto& run : report.runs) {
            if (run.method == report.method) continue;
            const TaskMetrics* m = find_metrics(run, task);
            if (!m) continue;
            bool better = false;
            if (!best) {
                better = true;
            } else if (m->score_mean != best_metrics->score_mean) {
                better = m->score_mean > best_metrics->score_mean;
            } else if (m->success_rate != best_metrics->success_rate) {
                better = m->success_rate > best_metrics->success_rate;
            } else {
                better = run.method < best->method;
            }
            if (better) {
                best = &run;
                best_metrics = m;
            }
        }
        if (!best) throw MissingBaseline("no baseline run covers task " + task);

        report.best_baseline[task] = {best->method, best_metrics->score_mean,
                                      best_metrics->success_rate};
        report.deltas[task] = {mine->score_mean - best_metrics->score_mean,
                               mine->success_rate - best_metrics->success_rate};
    }

    for (const auto& [group, members] : task_groups()) {
        Delta acc;
        int n = 0;
        for (const auto& task : members) {
            auto it = report.deltas.find(task);
            if (it == report.deltas.end()) continue;
            acc.score += it->second.score;
            acc.success += it->second.success;
            ++n;
        }
        if (n == 0) continue;
        acc.score /= n;
        acc.success /= n;
        report.group_deltas.emplace_back(group, acc);
    }
    report.compared = true;
}

// ---- serialization ----------------------------------------------------------

namespace {

ordered_json metrics_json(const TaskMetrics& m) {
    ordered_json j;
    j["score_mean"] = m.score_mean;
    j["success_rate"] = m.success_rate;
    j["mean_time_ms"] = m.mean_time_ms;
    j["mean_tokens"] = m.mean_tokens;
    j["error_count"] = m.error_count;
    j["sample_count"] = m.sample_count;
    ordered_json rates = ordered_json::object();
    for (const auto& [id, rate] : m.signal_trigger_rates) rates[id] = rate;
    j["signal_trigger_rates"] = rates;
    return j;
}

TaskMetrics metrics_from_json(const ordered_json& j) {
    TaskMetrics m;
    m.score_mean = j.at("score_mean").get<double>();
    m.success_rate = j.at("success_rate").get<double>();
    m.mean_time_ms = j.at("mean_time_ms").get<double>();
    m.mean_tokens = j.at("mean_tokens").get<double>();
    m.error_count = j.at("error_count").get<int>();
    m.sample_count = j.at("sample_count").get<int>();
    for (const auto& [id, rate] : j.at("signal_trigger_rates").items()) {
        m.signal_trigger_rates[id] = rate.get<double>();
    }
    return m;
}

ordered_json summary_json(const MethodSummary& s) {
    ordered_json j;
    j["score_mean"] = s.score_mean;
    j["success_rate"] = s.success_rate;
    j["mean_time_ms"] = s.mean_time_ms;
    j["mean_tokens"] = s.mean_tokens;
    j["error_count"] = s.error_count;
    j["sample_count"] = s.sample_count;
    return j;
}

MethodSummary summary_from_json(const ordered_json& j) {
    MethodSummary s;
    s.score_mean = j.at("score_mean").get<double>();
    s.success_rate = j.at("success_rate").get<double>();
    s.mean_time_ms = j.at("mean_time_ms").get<double>();
    s.mean_tokens = j.at("mean_tokens").get<double>();
    s.error_count = j.at("error_count").get<int>();
    s.sample_count = j.at("sample_count").get<int>();
    return s;
}

} // namespace

std::string report_to_json(const EvalReport& report) {
    ordered_json doc;
    doc["schema_version"] = 1;
    ordered_json prov;
    prov["backend"] = report.provenance.backend;
    prov["suite_hash"] = report.provenance.suite_hash;
    prov["fixture_hash"] = report.provenance.fixture_hash;
    doc["provenance"] = prov;
    doc["task_order"] = ordered_json(report.task_order);

    ordered_json runs = ordered_json::array();
    for (const auto& run : report.runs) {
        ordered_json rj;
        rj["method"] = run.method;
        ordered_json per_task = ordered_json::object();
        for (const auto& [task, metrics] : run.per_task) per_task[task] = metrics_json(metrics);
        rj["per_task"] = per_task;
        rj["summary"] = summary_json(run.summary);
        runs.push_back(rj);
    }
    doc["runs"] = runs;

    if (report.compared) {
        ordered_json cmp;
        cmp["method"] = report.method;
        ordered_json best = ordered_json::object();
        for (const auto& task : report.task_order) {
            auto it = report.best_baseline.find(task);
            if (it == report.best_baseline.end()) continue;
            ordered_json bj;
            bj["method"] = it->second.method;
            bj["score_mean"] = it->second.score_mean;
            bj["success_rate"] = it->second.success_rate;
            best[task] = bj;
        }
        cmp["best_baseline"] = best;
        ordered_json deltas = ordered_json::object();
        for (const auto& task : report.task_order) {
            auto it = report.deltas.find(task);
            if (it == report.deltas.end()) continue;
            ordered_json dj;
            dj["score"] = it->second.score;
            dj["success"] = it->second.success;
            deltas[task] = dj;
        }
        cmp["deltas"] = deltas;
        ordered_json groups = ordered_json::object();
        for (const auto& [group, delta] : report.group_deltas) {
            ordered_json gj;
            gj["score"] = delta.score;
            gj["success"] = delta.success;
            groups[group] = gj;
        }
        cmp["group_deltas"] = groups;
        doc["comparison"] = cmp;
    }
    return doc.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& document) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(document);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("report does not parse: ") + e.what());
    }
    EvalReport report;
    try {
        report.provenance.backend = doc.at("provenance").at("backend").get<std::string>();
        report.provenance.suite_hash = doc.at("provenance").at("suite_hash").get<std::string>();
        report.provenance.fixture_hash = doc.at("provenance").at("fixture_hash").get<std::string>();
        for (const auto& t : doc.at("task_order")) report.task_order.push_back(t.get<std::string>());
        for (const auto& rj : doc.at("runs")) {
            ProtocolRun run;
            run.method = rj.at("method").get<std::string>();
            for (const auto& task : report.task_order) {
                if (rj.at("per_task").contains(task)) {
                    run.per_task.emplace_back(task, metrics_from_json(rj.at("per_task").at(task)));
                }
            }
            run.summary = summary_from_json(rj.at("summary"));
            report.runs.push_back(std::move(run));
        }
        if (doc.contains("comparison")) {
            const auto& cmp = doc.at("comparison");
            report.method = cmp.at("method").get<std::string>();
            for (const auto& [task, bj] : cmp.at("best_baseline").items()) {
                report.best_baseline[task] = {bj.at("method").get<std::string>(),
                                              bj.at("score_mean").get<double>(),
                                              bj.at("success_rate").get<double>()};
            }
            for (const auto& [task, dj] : cmp.at("deltas").items()) {
                report.deltas[task] = {dj.at("score").get<double>(),
                                       dj.at("success").get<double>()};
            }
            for (const auto& [group, gj] : cmp.at("group_deltas").items()) {
                report.group_deltas.emplace_back(
                    group, Delta{gj.at("score").get<double>(), gj.at("success").get<double>()});
            }
            report.compared = true;
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("report field error: ") + e.what());
    }
    return report;
}

// ---- text rendering ---------------------------------------------------------

namespace {

std::string fmt(double v, int decimals = 3) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

std::string pad(const std::string& s, size_t width) {
    if (s.size() >= width) return s + " ";
    return s + std::string(width - s.size(), ' ');
}

} // namespace

std::string render_report_text(const EvalReport& report) {
    std::string out;
    out += "CBL evaluation report\n";
    out += "backend: " + report.provenance.backend + "  suite: " + report.provenance.suite_hash +
           "  fixtures: " + report.provenance.fixture_hash + "\n\n";

    out += "Per-task metrics (15 samples each)\n";
    out += pad("method", 12) + pad("task", 22) + pad("score", 7) + pad("success", 8) +
           pad("time_ms", 10) + pad("tokens", 11) + "errors\n";
    for (const auto& run : report.runs) {
        for (const auto& [task, m] : run.per_task) {
            out += pad(run.method, 12) + pad(task, 22) + pad(fmt(m.score_mean), 7) +
                   pad(fmt(m.success_rate), 8) + pad(fmt(m.mean_time_ms, 1), 10) +
                   pad(fmt(m.mean_tokens, 1), 11) + std::to_string(m.error_count) + "\n";
        }
    }

    out += "\nMethod summaries (all tasks pooled)\n";
    out += pad("method", 12) + pad("score", 7) + pad("success", 8) + pad("time_ms", 10) +
           pad("tokens", 11) + "errors\n";
    for (const auto& run : report.runs) {
        const auto& s = run.summary;
        out += pad(run.method, 12) + pad(fmt(s.score_mean), 7) + pad(fmt(s.success_rate), 8) +
               pad(fmt(s.mean_time_ms, 1), 10) + pad(fmt(s.mean_tokens, 1), 11) +
               std::to_string(s.error_count) + "\n";
    }

    if (report.compared) {
        out += "\nBest baseline and deltas (method: " + report.method + ")\n";
        out += pad("task", 22) + pad("baseline", 12) + pad("b_score", 8) + pad("b_success", 10) +
               pad("d_score", 8) + "d_success\n";
        for (const auto& task : report.task_order) {
            auto bit = report.best_baseline.find(task);
            auto dit = report.deltas.find(task);
            if (bit == report.best_baseline.end() || dit == report.deltas.end()) continue;
            out += pad(task, 22) + pad(bit->second.method, 12) +
                   pad(fmt(bit->second.score_mean), 8) + pad(fmt(bit->second.success_rate), 10) +
                   pad(fmt(dit->second.score), 8) + fmt(dit->second.success) + "\n";
        }
        out += "\nGroup deltas\n";
        for (const auto& [group, delta] : report.group_deltas) {
            out += pad(group, 12) + pad(fmt(delta.score), 8) + fmt(delta.success) + "\n";
        }
    }

    bool any_signals = false;
    for (const auto& run : report.runs) {
        for (const auto& [task, m] : run.per_task) {
            if (!m.signal_trigger_rates.empty()) any_signals = true;
        }
    }
    if (any_signals) {
        out += "\nSignal trigger rates\n";
        out += pad("method", 12) + pad("task", 22) + pad("signal", 26) + "rate\n";
        for (const auto& run : report.runs) {
            for (const auto& [task, m] : run.per_task) {
                for (const auto& [id, rate] : m.signal_trigger_rates) {
                    out += pad(run.method, 12) + pad(task, 22) + pad(id, 26) + fmt(rate) + "\n";
                }
            }
        }
    }
    return out;
}

// ---- ablation ----------------------------------------------------------------

const std::vector<std::string>& ablation_condition_names() {
    static const std::vector<std::string> names = {"full",      "drop-fact",       "drop-constraint",
                                                   "drop-skill", "drop-curriculum", "rule-memory"};
    return names;
}

AblationReport run_ablation(const SuiteConfig& suite, const std::string& bundle_document,
                            const std::vector<std::string>& diagnostics,
                            const std::string& fixture_dir, int64_t budget_chars) {
    struct Condition {
        std::string name;
        std::set<ModuleKind> drop;
        Strategy strategy;
    };
    const std::vector<Condition> conditions = {
        {"full", {}, Strategy::cbl()},
        {"drop-fact", {ModuleKind::Fact}, Strategy::cbl()},
        {"drop-constraint", {ModuleKind::Constraint}, Strategy::cbl()},
        {"drop-skill", {ModuleKind::Skill}, Strategy::cbl()},
        {"drop-curriculum", {ModuleKind::Curriculum}, Strategy::cbl()},
        {"rule-memory", {}, Strategy::rule_memory()},
    };

    std::vector<const TaskDefinition*> tasks;
    for (const auto& id : diagnostics) {
        const TaskDefinition* task = suite.find_task(id);
        if (!task) throw ConfigError("unknown diagnostic task: " + id);
        tasks.push_back(task);
    }
    if (tasks.empty()) throw ConfigError("ablation needs at least one diagnostic task");

    AblationReport report;
    report.diagnostics = diagnostics;
    report.provenance.suite_hash = suite.source_hash;
    report.provenance.backend = "replay";

    std::string combined_fixture_hash;
    for (const auto& cond : conditions) {
        ReplayBackend backend = ReplayBackend::load(fixture_dir + "/" + cond.name + ".json");
        combined_fixture_hash += backend.source_hash();

        MemoryBank bank = import_bundle(bundle_document, "ablation-" + cond.name, cond.drop);

        AblationRow row;
        row.condition = cond.name;
        int64_t score_sum = 0;
        int success_sum = 0;
        int total = 0;
        for (const TaskDefinition* task : tasks) {
            auto samples = make_samples(*task);
            auto loop =
                run_case_loop(bank, *task, samples, cond.strategy, backend, suite, budget_chars);
            std::vector<SampleScore> scores;
            std::vector<ExecutionTrace> traces;
            for (const auto& step : loop.steps) {
                scores.push_back(step.score);
                traces.push_back(step.trace);
            }
            for (size_t i = loop.steps.size(); i < samples.size(); ++i) {
                SampleScore s;
                s.sample_id = samples[i].sample_id;
                s.errored = true;
                scores.push_back(s);
                traces.push_back(placeholder_trace(samples[i], static_cast<int64_t>(i), loop.error));
            }
            TaskMetrics metrics = aggregate_metrics(*task, scores, traces);
            for (const auto& s : scores) {
                score_sum += s.score;
                success_sum += s.success ? 1 : 0;
            }
            row.error_count += metrics.error_count;
            total += metrics.sample_count;
            for (const auto& [id, rate] : metrics.signal_trigger_rates) {
                row.signal_rates[id] = rate;
            }
        }
        row.avg_score = static_cast<double>(score_sum) / total;
        row.success_rate = static_cast<double>(success_sum) / total;
        report.rows.push_back(std::move(row));
    }
    report.provenance.fixture_hash = to_hex64(fnv1a64(combined_fixture_hash));
    return report;
}

std::string ablation_to_json(const AblationReport& report) {
    ordered_json doc;
    doc["schema_version"] = 1;
    ordered_json prov;
    prov["backend"] = report.provenance.backend;
    prov["suite_hash"] = report.provenance.suite_hash;
    prov["fixture_hash"] = report.provenance.fixture_hash;
    doc["provenance"] = prov;
    doc["diagnostics"] = ordered_json(report.diagnostics);
    ordered_json rows = ordered_json::array();
    for (const auto& row : report.rows) {
        ordered_json rj;
        rj["condition"] = row.condition;
        rj["avg_score"] = row.avg_score;
        rj["success_rate"] = row.success_rate;
        rj["error_count"] = row.error_count;
        ordered_json rates = ordered_json::object();
        for (const auto& [id, rate] : row.signal_rates) rates[id] = rate;
        rj["signal_rates"] = rates;
        rows.push_back(rj);
    }
    doc["conditions"] = rows;
    return doc.dump(2) + "\n";
}

std::string render_ablation_text(const AblationReport& report) {
    std::string out;
    out += "CBL ablation report (diagnostics: " + join(report.diagnostics, ", ") + ")\n\n";
    out += pad("condition", 18) + pad("avg_score", 10) + pad("success", 8) + "errors\n";
    for (const auto& row : report.rows) {
        out += pad(row.condition, 18) + pad(fmt(row.avg_score), 10) + pad(fmt(row.success_rate), 8) +
               std::to_string(row.error_count) + "\n";
    }
    out += "\nSignal trigger rates per condition\n";
    out += pad("condition", 18) + pad("signal", 26) + "rate\n";
    for (const auto& row : report.rows) {
        for (const auto& [id, rate] : row.signal_rates) {
            out += pad(row.condition, 18) + pad(id, 26) + fmt(rate) + "\n";
        }
    }
    return out;
}

} // namespace cbl
