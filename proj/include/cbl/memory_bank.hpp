#pragma once
#include "cbl/failure.hpp"

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace cbl {

// The four structured experience stores, one per memory module:
// Fact -> fixed domain knowledge, Constraint -> behavioral rules,
// Skill -> validated method templates, Curriculum -> ordered case history.
enum class ModuleKind { Fact, Constraint, Skill, Curriculum };

std::string module_kind_slug(ModuleKind kind);
ModuleKind module_kind_from_slug(const std::string& slug);

// Stable background knowledge. Entries are seeded or imported, never
// synthesized by the update function.
struct KnowledgeFact {
    std::string id; // content_id of the normalized text
    std::string text;
    std::vector<std::string> tags;
    std::string source_case; // originating case id, or "seed"
    int64_t created_at = 0;

    bool operator==(const KnowledgeFact&) const = default;
};

// Imperative behavioral rule distilled from a failure (or seeded).
struct ConstraintRule {
    std::string id;
    std::string text;
    std::optional<FailureKind> trigger_failure; // set when synthesized from a failure
    std::vector<std::string> tags;
    std::string source_case;
    int64_t created_at = 0;

    bool operator==(const ConstraintRule&) const = default;
};

// Reusable method template. validation_count grows by one each time the
// same skill is re-extracted from a successful case; it never resets.
struct SkillTemplate {
    std::string id;
    std::string name;
    std::vector<std::string> steps; // ordered, at least one
    std::vector<std::string> applicability_tags;
    int validation_count = 1;

    bool operator==(const SkillTemplate&) const = default;
};

// A sample counts as successful only above this rubric score.
inline constexpr int kSuccessScoreThreshold = 3;
inline constexpr int kRubricSize = 4;

// One completed task execution, recorded as a learning unit.
struct CaseRecord {
    std::string case_id;
    std::string task_category;
    std::string summary;
    double difficulty = 0.0; // in [0,1]
    bool success = false;
    int score = 0; // 0..4
    int64_t duration_ms = 0;
    std::vector<FailureKind> failure_kinds;
    int64_t created_at = 0;

    bool operator==(const CaseRecord&) const = default;
};

struct MemoryBank {
    std::string agent_id;
    int schema_version = 1;
    std::vector<KnowledgeFact> facts;
    std::vector<ConstraintRule> constraints;
    std::vector<SkillTemplate> skills;
    std::vector<CaseRecord> cases;

    bool operator==(const MemoryBank&) const = default;
};

MemoryBank make_bank(const std::string& agent_id);

// Factory helpers. They normalize tags, derive the deterministic id, and
// throw MalformedEntry when the type invariants cannot hold.
KnowledgeFact make_fact(const std::string& text, const std::vector<std::string>& tags,
                        const std::string& source_case = "seed", int64_t created_at = 0);
ConstraintRule make_constraint(const std::string& text, const std::vector<std::string>& tags,
                               std::optional<FailureKind> trigger_failure = std::nullopt,
                               const std::string& source_case = "seed", int64_t created_at = 0);
SkillTemplate make_skill(const std::string& name, const std::vector<std::string>& steps,
                         const std::vector<std::string>& applicability_tags);

// Insert an entry into its store. An entry whose id is already present is
// kept as-is, except skills, whose validation_count is incremented.
// Returns the new bank; the second member reports whether the store changed
// (entry added, or skill count bumped).
std::pair<MemoryBank, bool> add_entry(MemoryBank bank, const KnowledgeFact& fact);
std::pair<MemoryBank, bool> add_entry(MemoryBank bank, const ConstraintRule& rule);
std::pair<MemoryBank, bool> add_entry(MemoryBank bank, const SkillTemplate& skill);
std::pair<MemoryBank, bool> add_entry(MemoryBank bank, const CaseRecord& record);

// Relevance-ordered retrieval. Entries are ranked by descending tag overlap
// with task_tags (see score_relevance), ties broken by ascending created_at
// then ascending id. Returns at most `limit` entries.
std::vector<KnowledgeFact> query_facts(const MemoryBank& bank,
                                       const std::vector<std::string>& task_tags, size_t limit);
std::vector<ConstraintRule> query_constraints(const MemoryBank& bank,
                                              const std::vector<std::string>& task_tags,
                                              size_t limit);
std::vector<SkillTemplate> query_skills(const MemoryBank& bank,
                                        const std::vector<std::string>& task_tags, size_t limit);
std::vector<CaseRecord> query_cases(const MemoryBank& bank,
                                    const std::vector<std::string>& task_tags, size_t limit);

// Canonical serialization: stable key order, stable list order, so equal
// banks produce byte-identical documents.
std::string serialize_bank(const MemoryBank& bank);
MemoryBank deserialize_bank(const std::string& document); // UnsupportedVersion | CorruptBundle

// Return a copy with the dropped stores emptied. Input is untouched.
MemoryBank ablate(const MemoryBank& bank, const std::set<ModuleKind>& drop);

bool bank_has_case(const MemoryBank& bank, const std::string& case_id);

} // namespace cbl
