#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "cbl/context_assembler.hpp"
#include "cbl/errors.hpp"
#include "cbl/memory_bank.hpp"
#include "cbl/text.hpp"

#include "json.hpp"

#include <algorithm>
#include <random>

using namespace cbl;

namespace {

MemoryBank one_of_each() {
    MemoryBank bank = make_bank("tester");
    bank = add_entry(bank, make_fact("Connectors carry access labels.", {"rag", "permissions"},
                                     "seed", 3)).first;
    bank = add_entry(bank, make_constraint("Check access before retrieval.", {"rag"},
                                           FailureKind::schema_validation_failure(), "case-1", 4)).first;
    bank = add_entry(bank, make_skill("stable-citations", {"pin ids", "re-resolve after refresh"},
                                      {"rag"})).first;
    CaseRecord rec;
    rec.case_id = "case-1";
    rec.task_category = "enterprise_rag";
    rec.summary = "enterprise_rag sample case-1: score 4/4, succeeded";
    rec.difficulty = 0.25;
    rec.success = true;
    rec.score = 4;
    rec.duration_ms = 1200;
    rec.created_at = 5;
    bank = add_entry(bank, rec).first;
    return bank;
}

} // namespace

TEST_CASE("normalization and id determinism") {
    CHECK(normalize_text("  Hello   World. ") == "hello world");
    CHECK(normalize_text("hello world") == "hello world");
    CHECK(fold_text("A\tB\nC") == "a b c");
    CHECK(normalize_text(" .,;: ") == "");

    auto a = make_fact("Recheck Field   Formats.", {"schema"}, "seed", 0);
    auto b = make_fact("recheck field formats", {"schema"}, "seed", 9);
    CHECK(a.id == b.id);
    CHECK(a.id.size() == 16);

    // Equal inputs give equal ids across types too (by construction).
    CHECK(make_constraint("recheck field formats", {}).id == a.id);
}

TEST_CASE("factory invariants") {
    CHECK_THROWS_AS(make_fact("   ", {}), MalformedEntry);
    CHECK_THROWS_AS(make_fact(" .. ", {}), MalformedEntry);
    CHECK_THROWS_AS(make_skill("s", {}, {}), MalformedEntry);
    CHECK_THROWS_AS(make_skill("s", {" "}, {}), MalformedEntry);
    CHECK_THROWS_AS(FailureKind::other("  "), MalformedEntry);

    auto fact = make_fact("Text", {"B", "a", "b", " "}, "seed", 0);
    CHECK(fact.tags == std::vector<std::string>{"a", "b"}); // sorted, unique, folded
}

TEST_CASE("add_entry dedupes by id") {
    MemoryBank bank = make_bank("a");
    auto rule = make_constraint("Recheck field formats before emitting output", {"tools"},
                                FailureKind::schema_validation_failure());
    bank = add_entry(bank, rule).first;
    CHECK(bank.constraints.size() == 1);
    auto [again, changed] = add_entry(bank, rule);
    CHECK_FALSE(changed);
    CHECK(again.constraints.size() == 1);
    CHECK(again.constraints[0].trigger_failure == FailureKind::schema_validation_failure());

    auto skill = make_skill("validate", {"derive schema", "check formats"}, {"tools"});
    bank = add_entry(again, skill).first;
    CHECK(bank.skills.size() == 1);
    CHECK(bank.skills[0].validation_count == 1);
    bank = add_entry(bank, skill).first;
    CHECK(bank.skills.size() == 1);
    CHECK(bank.skills[0].validation_count == 2);
}

TEST_CASE("append monotonicity under random adds") {
    std::mt19937 rng(7);
    MemoryBank bank = make_bank("mono");
    size_t last_facts = 0, last_rules = 0;
    for (int i = 0; i < 200; ++i) {
        // Duplicates are frequent on purpose.
        std::string text = "entry number " + std::to_string(rng() % 40);
        if (rng() % 2 == 0) {
            bank = add_entry(bank, make_fact(text, {"t"}, "seed", i)).first;
        } else {
            bank = add_entry(bank, make_constraint(text, {"t"}, std::nullopt, "seed", i)).first;
        }
        CHECK(bank.facts.size() >= last_facts);
        CHECK(bank.constraints.size() >= last_rules);
        last_facts = bank.facts.size();
        last_rules = bank.constraints.size();
    }
}

TEST_CASE("query ranks by relevance with documented tie-breaks") {
    MemoryBank bank = make_bank("q");
    CHECK(query_facts(bank, {"schema"}, 10).empty());

    auto f1 = make_fact("Schemas are validated by the dispatcher.", {"schema", "tools"}, "seed", 8);
    auto f2 = make_fact("Budgets are metered per call.", {"budget"}, "seed", 1);
    bank = add_entry(bank, f1).first;
    bank = add_entry(bank, f2).first;

    // Oracle: brute-force the documented sort key over both entries.
    std::vector<std::pair<double, std::string>> oracle;
    for (const auto& f : bank.facts) {
        oracle.emplace_back(score_relevance(f.tags, {"schema"}), f.id);
    }
    std::stable_sort(oracle.begin(), oracle.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });

    auto got = query_facts(bank, {"schema"}, 10);
    REQUIRE(got.size() == 2);
    CHECK(got[0].id == oracle[0].second);
    CHECK(got[0].id == f1.id);

    CHECK(query_facts(bank, {"schema"}, 0).empty());
    CHECK(query_facts(bank, {"schema"}, 1).size() == 1);

    // Equal relevance: ascending created_at, then ascending id.
    MemoryBank ties = make_bank("ties");
    auto t1 = make_fact("alpha fact", {"x"}, "seed", 5);
    auto t2 = make_fact("beta fact", {"x"}, "seed", 2);
    ties = add_entry(ties, t1).first;
    ties = add_entry(ties, t2).first;
    auto ordered = query_facts(ties, {"x"}, 10);
    REQUIRE(ordered.size() == 2);
    CHECK(ordered[0].created_at == 2);
    CHECK(ordered[1].created_at == 5);
}

TEST_CASE("canonical serialization round-trip") {
    MemoryBank empty = make_bank("empty-agent");
    CHECK(deserialize_bank(serialize_bank(empty)) == empty);

    MemoryBank bank = one_of_each();
    std::string doc = serialize_bank(bank);
    CHECK(deserialize_bank(doc) == bank);
    CHECK(serialize_bank(bank) == doc); // pure function, byte-identical

    // Equal banks built independently serialize identically.
    CHECK(serialize_bank(one_of_each()) == doc);
}

TEST_CASE("deserialize rejects bad documents") {
    CHECK_THROWS_AS(deserialize_bank("not json"), CorruptBundle);
    CHECK_THROWS_AS(deserialize_bank("{}"), CorruptBundle);

    MemoryBank bank = one_of_each();
    auto doc = nlohmann::ordered_json::parse(serialize_bank(bank));
    doc["schema_version"] = 2;
    CHECK_THROWS_AS(deserialize_bank(doc.dump()), UnsupportedVersion);

    auto dup = nlohmann::ordered_json::parse(serialize_bank(bank));
    dup["facts"].push_back(dup["facts"][0]);
    CHECK_THROWS_AS(deserialize_bank(dup.dump()), CorruptBundle);

    auto bad_case = nlohmann::ordered_json::parse(serialize_bank(bank));
    bad_case["cases"][0]["difficulty"] = 1.5;
    CHECK_THROWS_AS(deserialize_bank(bad_case.dump()), CorruptBundle);
}

TEST_CASE("ablate drops exactly the requested stores") {
    MemoryBank bank = one_of_each();
    CHECK(ablate(bank, {}) == bank);

    MemoryBank no_facts = ablate(bank, {ModuleKind::Fact});
    CHECK(no_facts.facts.empty());
    CHECK(no_facts.constraints == bank.constraints);
    CHECK(no_facts.skills == bank.skills);
    CHECK(no_facts.cases == bank.cases);
    CHECK(bank.facts.size() == 1); // input untouched

    MemoryBank fresh = ablate(bank, {ModuleKind::Fact, ModuleKind::Constraint, ModuleKind::Skill,
                                     ModuleKind::Curriculum});
    CHECK(fresh == make_bank(bank.agent_id));
}

TEST_CASE("ablation disjointness") {
    MemoryBank bank = one_of_each();
    auto a = ablate(bank, {ModuleKind::Fact});
    auto b = ablate(bank, {ModuleKind::Skill});
    // Outside the union of the dropped sets the two results agree.
    CHECK(a.constraints == b.constraints);
    CHECK(a.cases == b.cases);
}

TEST_CASE("seed bank fixture ids match the engine's content ids") {
    auto doc = nlohmann::ordered_json::parse(
        read_file(std::string(CBL_FIXTURES_DIR) + "/ablation/seed_bank.json"));
    for (const auto& f : doc.at("facts")) {
        CHECK(f.at("id").get<std::string>() == content_id(f.at("text").get<std::string>()));
    }
    for (const auto& c : doc.at("constraints")) {
        CHECK(c.at("id").get<std::string>() == content_id(c.at("text").get<std::string>()));
    }
    for (const auto& s : doc.at("skills")) {
        std::vector<std::string> steps;
        for (const auto& step : s.at("steps")) steps.push_back(step.get<std::string>());
        CHECK(s.at("id").get<std::string>() ==
              make_skill(s.at("name").get<std::string>(), steps, {}).id);
    }
}
