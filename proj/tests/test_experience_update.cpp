#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "cbl/errors.hpp"
#include "cbl/experience_update.hpp"
#include "cbl/suite.hpp"
#include "cbl/text.hpp"

#include <map>

using namespace cbl;

namespace {

const std::string kFixtures = CBL_FIXTURES_DIR;

ExecutionTrace golden(const std::string& name) {
    return load_trace_file(kFixtures + "/traces/" + name + ".json");
}

TaskDefinition tool_task() {
    return *load_suite(kFixtures + "/suite.json").find_task("tool_orchestration");
}

ExecutionTrace clean_trace(const std::string& case_id, const std::string& output,
                           int64_t started_at = 0) {
    ExecutionTrace t;
    t.case_id = case_id;
    t.task_category = "tool_orchestration";
    t.started_at_ms = started_at;
    t.events.push_back({0, "model_call", "prompt", 0});
    t.events.push_back({1, "output", output, 900});
    t.final_output = output;
    t.duration_ms = 1000;
    t.tokens_in = 100;
    t.tokens_out = 50;
    return t;
}

} // namespace

TEST_CASE("golden corpus: each trace classifies as exactly its kind") {
    const std::map<std::string, FailureKind> expected = {
        {"timeout", FailureKind::timeout()},
        {"runtime_error", FailureKind::runtime_error()},
        {"blank_output", FailureKind::blank_output()},
        {"loop_detected", FailureKind::loop_detected()},
        {"schema_validation", FailureKind::schema_validation_failure()},
    };
    for (const auto& [name, kind] : expected) {
        CAPTURE(name);
        auto hits = classify_failures(golden(name), 60000);
        REQUIRE(hits.size() == 1);
        CHECK(hits[0].kind == kind);
    }
}

TEST_CASE("detector pipeline order and edge cases") {
    // No failures: clean completed trace with output.
    CHECK(classify_failures(clean_trace("ok", "Findings attached."), 60000).empty());

    // Loop plus blank output fire in pipeline order.
    ExecutionTrace t;
    t.case_id = "loop-blank";
    t.task_category = "tool_orchestration";
    t.events = {
        {0, "tool_call", "search(q)", 0},
        {1, "tool_call", "search(q)", 10},
        {2, "tool_call", "search(q)", 20},
    };
    t.final_output = "";
    t.duration_ms = 30;
    auto hits = classify_failures(t, 60000);
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].kind == FailureKind::loop_detected());
    CHECK(hits[1].kind == FailureKind::blank_output());
    CHECK(hits[0].seq == 2); // the event completing the run of three

    // Duration alone can trip the timeout detector.
    auto slow = clean_trace("slow", "done");
    slow.duration_ms = 61000;
    auto slow_hits = classify_failures(slow, 60000);
    REQUIRE(slow_hits.size() == 1);
    CHECK(slow_hits[0].kind == FailureKind::timeout());

    // Two identical calls are a retry, not a loop.
    ExecutionTrace retry = clean_trace("retry", "done");
    retry.events = {
        {0, "tool_call", "fetch(1)", 0},
        {1, "tool_call", "fetch(1)", 10},
        {2, "output", "done", 20},
    };
    retry.duration_ms = 30;
    CHECK(classify_failures(retry, 60000).empty());

    // An intervening event breaks the run.
    ExecutionTrace broken = retry;
    broken.events = {
        {0, "tool_call", "fetch(1)", 0},
        {1, "tool_call", "fetch(1)", 10},
        {2, "output", "partial", 20},
        {3, "tool_call", "fetch(1)", 30},
        {4, "output", "done", 40},
    };
    broken.duration_ms = 50;
    CHECK(classify_failures(broken, 60000).empty());

    // Custom detectors classify as Other, after the named ones.
    DetectorTable detectors;
    detectors.custom.push_back({"rate_limited", "error", "rate limit"});
    ExecutionTrace limited = clean_trace("limited", "done");
    limited.events.push_back({2, "error", "provider rate limit reached", 950});
    auto custom_hits = classify_failures(limited, 60000, detectors);
    REQUIRE(custom_hits.size() == 1);
    CHECK(custom_hits[0].kind == FailureKind::other("rate_limited"));
}

TEST_CASE("constraint synthesis uses the frozen template table") {
    auto schema_rule = synthesize_constraint(FailureKind::schema_validation_failure(), "enterprise_rag");
    CHECK(schema_rule.text.find("field formats should be rechecked") != std::string::npos);
    CHECK(schema_rule.trigger_failure == FailureKind::schema_validation_failure());
    CHECK(schema_rule.tags == std::vector<std::string>{"enterprise_rag"});

    auto loop_rule = synthesize_constraint(FailureKind::loop_detected(), "tool_orchestration");
    CHECK(loop_rule.text == "Terminate after N identical consecutive calls; change strategy or stop.");

    // Same (kind, category) pair gives the identical rule id.
    auto again = synthesize_constraint(FailureKind::loop_detected(), "tool_orchestration");
    CHECK(again.id == loop_rule.id);

    auto other_rule = synthesize_constraint(FailureKind::other("rate_limited"), "tool_orchestration");
    CHECK(other_rule.text.find("rate_limited") != std::string::npos);
    CHECK_THROWS_AS(FailureKind::other(""), MalformedEntry);
}

TEST_CASE("skills come only from successes with skill-mapped checkpoints") {
    TaskDefinition task = tool_task();

    SampleScore failed;
    failed.success = false;
    failed.satisfied = {"schema_validation"};
    CHECK(extract_skills(clean_trace("f", "x"), failed, task.rubric, task.category_id).empty());

    SampleScore ok;
    ok.success = true;
    ok.score = 4;
    ok.satisfied = {"termination", "budget_control", "schema_validation", "loop_recovery"};
    auto skills = extract_skills(clean_trace("s", "x"), ok, task.rubric, task.category_id);
    REQUIRE(skills.size() == 1); // only schema_validation declares a skill
    CHECK(skills[0].name == "validate-before-emit");
    CHECK(skills[0].steps.size() == 3);

    SampleScore no_mapped;
    no_mapped.success = true;
    no_mapped.score = 3;
    no_mapped.satisfied = {"termination", "budget_control", "loop_recovery"};
    CHECK(extract_skills(clean_trace("n", "x"), no_mapped, task.rubric, task.category_id).empty());
}

TEST_CASE("apply_phi composition") {
    SuiteConfig suite = load_suite(kFixtures + "/suite.json");
    TaskDefinition task = *suite.find_task("tool_orchestration");
    PhiOptions phi = suite.phi_options();

    SUBCASE("clean success with no mapped checkpoints adds exactly one case") {
        MemoryBank bank = make_bank("a");
        SampleScore score;
        score.sample_id = "s1";
        score.success = true;
        score.score = 3;
        score.satisfied = {"termination", "budget_control", "loop_recovery"};
        auto [updated, delta] = apply_phi(bank, clean_trace("s1", "fine"), score, task, phi);
        CHECK(updated.cases.size() == 1);
        CHECK(updated.facts.empty());
        CHECK(updated.constraints.empty());
        CHECK(updated.skills.empty());
        CHECK(delta.new_constraints.empty());
        CHECK(delta.new_skills.empty());
        CHECK(delta.case_recorded.case_id == "s1");
        CHECK(delta.case_recorded.success);
    }

    SUBCASE("schema failure synthesizes the field-formats rule") {
        MemoryBank bank = make_bank("a");
        ExecutionTrace t = golden("schema_validation");
        SampleScore score;
        score.sample_id = t.case_id;
        score.score = 0;
        score.errored = true;
        auto [updated, delta] = apply_phi(bank, t, score, task, phi);
        REQUIRE(updated.constraints.size() == 1);
        CHECK(updated.constraints[0].text.find("field formats should be rechecked") !=
              std::string::npos);
        REQUIRE(updated.cases.size() == 1);
        CHECK(updated.cases[0].failure_kinds ==
              std::vector<FailureKind>{FailureKind::schema_validation_failure()});
        CHECK(delta.failures.size() == 1);
        CHECK(delta.new_constraints.size() == 1);
    }

    SUBCASE("duplicate case id raises") {
        MemoryBank bank = make_bank("a");
        SampleScore score;
        score.sample_id = "dup";
        auto [updated, delta] = apply_phi(bank, clean_trace("dup", "x"), score, task, phi);
        (void)delta;
        CHECK_THROWS_AS(apply_phi(updated, clean_trace("dup", "x"), score, task, phi),
                        DuplicateCase);
    }

    SUBCASE("idempotent rule growth over repeated failures") {
        MemoryBank bank = make_bank("a");
        for (int i = 0; i < 10; ++i) {
            ExecutionTrace t = golden("schema_validation");
            t.case_id = "case-" + std::to_string(i);
            t.started_at_ms = i;
            SampleScore score;
            score.sample_id = t.case_id;
            score.errored = true;
            auto [updated, delta] = apply_phi(bank, t, score, task, phi);
            bank = std::move(updated);
            if (i == 0) {
                CHECK(delta.new_constraints.size() == 1);
            } else {
                CHECK(delta.new_constraints.empty());
            }
        }
        CHECK(bank.constraints.size() == 1);
        CHECK(bank.cases.size() == 10);
    }

    SUBCASE("facts are invariant under the update") {
        MemoryBank bank = make_bank("a");
        bank = add_entry(bank, make_fact("Known background.", {"tools"}, "seed", 0)).first;
        auto facts_before = bank.facts;
        for (const auto& name :
             {"timeout", "runtime_error", "blank_output", "loop_detected", "schema_validation"}) {
            ExecutionTrace t = golden(name);
            SampleScore score;
            score.sample_id = t.case_id;
            score.errored = true;
            bank = apply_phi(bank, t, score, task, phi).first;
            CHECK(bank.facts == facts_before);
        }
        CHECK(bank.cases.size() == 5);
        CHECK(bank.constraints.size() == 5); // one per failure kind
    }

    SUBCASE("determinism: timestamps come from the trace, not the clock") {
        SampleScore score;
        score.sample_id = "d1";
        score.success = true;
        score.score = 4;
        score.satisfied = {"termination", "budget_control", "schema_validation", "loop_recovery"};
        auto one = apply_phi(make_bank("a"), clean_trace("d1", "x", 42), score, task, phi);
        auto two = apply_phi(make_bank("a"), clean_trace("d1", "x", 42), score, task, phi);
        CHECK(serialize_bank(one.first) == serialize_bank(two.first));
        CHECK(one.first.cases[0].created_at == 42);
        CHECK(one.first.skills.size() == 1); // schema_validation satisfied on a success
    }

    SUBCASE("reflective summarizer hook feeds the constraint store") {
        PhiOptions hooked = phi;
        hooked.reflective_summarizer = [](const ExecutionTrace& t) {
            return std::vector<ConstraintRule>{
                make_constraint("Lesson from " + t.case_id, {"tools"}, std::nullopt, t.case_id)};
        };
        SampleScore score;
        score.sample_id = "h1";
        auto [updated, delta] = apply_phi(make_bank("a"), clean_trace("h1", "x"), score, task, hooked);
        CHECK(updated.constraints.size() == 1);
        CHECK(delta.new_constraints.size() == 1);
    }
}

TEST_CASE("difficulty recorded on the case matches the estimator") {
    SuiteConfig suite = load_suite(kFixtures + "/suite.json");
    TaskDefinition task = *suite.find_task("tool_orchestration");

    ExecutionTrace t = clean_trace("d2", "output");
    t.duration_ms = 30000; // half the 60s deadline
    SampleScore score;
    score.sample_id = "d2";
    score.score = 2;
    score.satisfied = {"budget_control", "schema_validation"};
    auto [updated, delta] = apply_phi(make_bank("a"), t, score, task, suite.phi_options());
    (void)delta;
    // 0 failures, score 2, half deadline: 0.3*0.5 + 0.3*0.5 = 0.30
    CHECK(updated.cases[0].difficulty == doctest::Approx(0.30));
}
