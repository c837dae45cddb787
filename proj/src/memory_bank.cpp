#include "cbl/memory_bank.hpp"

#include "cbl/context_assembler.hpp"
#include "cbl/errors.hpp"
#include "cbl/text.hpp"

#include "json.hpp"

#include <algorithm>

namespace cbl {

using ordered_json = nlohmann::ordered_json;

std::string module_kind_slug(ModuleKind kind) {
    switch (kind) {
        case ModuleKind::Fact: return "fact";
        case ModuleKind::Constraint: return "constraint";
        case ModuleKind::Skill: return "skill";
        case ModuleKind::Curriculum: return "curriculum";
    }
    return "fact";
}

ModuleKind module_kind_from_slug(const std::string& slug) {
    if (slug == "fact") return ModuleKind::Fact;
    if (slug == "constraint") return ModuleKind::Constraint;
    if (slug == "skill") return ModuleKind::Skill;
    if (slug == "curriculum") return ModuleKind::Curriculum;
    throw ConfigError("unknown module kind: " + slug);
}

MemoryBank make_bank(const std::string& agent_id) {
    MemoryBank bank;
    bank.agent_id = agent_id;
    bank.schema_version = 1;
    return bank;
}

// ---- factories -------------------------------------------------------------

KnowledgeFact make_fact(const std::string& text, const std::vector<std::string>& tags,
                        const std::string& source_case, int64_t created_at) {
    if (normalize_text(text).empty()) throw MalformedEntry("fact text is empty");
    KnowledgeFact f;
    f.id = content_id(text);
    f.text = text;
    f.tags = normalize_tags(tags);
    f.source_case = source_case;
    f.created_at = created_at;
    return f;
}

ConstraintRule make_constraint(const std::string& text, const std::vector<std::string>& tags,
                               std::optional<FailureKind> trigger_failure,
                               const std::string& source_case, int64_t created_at) {
    if (normalize_text(text).empty()) throw MalformedEntry("constraint text is empty");
    ConstraintRule r;
    r.id = content_id(text);
    r.text = text;
    r.trigger_failure = std::move(trigger_failure);
    r.tags = normalize_tags(tags);
    r.source_case = source_case;
    r.created_at = created_at;
    return r;
}

SkillTemplate make_skill(const std::string& name, const std::vector<std::string>& steps,
                         const std::vector<std::string>& applicability_tags) {
    if (normalize_text(name).empty()) throw MalformedEntry("skill name is empty");
    if (steps.empty()) throw MalformedEntry("skill steps are empty");
    for (const auto& s : steps) {
        if (normalize_text(s).empty()) throw MalformedEntry("skill step is empty");
    }
    SkillTemplate sk;
    sk.id = content_id(name + "\n" + join(steps, "\n"));
    sk.name = name;
    sk.steps = steps;
    sk.applicability_tags = normalize_tags(applicability_tags);
    sk.validation_count = 1;
    return sk;
}

// ---- add_entry -------------------------------------------------------------

namespace {

void require_case_invariants(const CaseRecord& rec) {
    if (rec.case_id.empty()) throw MalformedEntry("case id is empty");
    if (rec.difficulty < 0.0 || rec.difficulty > 1.0)
        throw MalformedEntry("case difficulty out of [0,1]: " + rec.case_id);
    if (rec.score < 0 || rec.score > kRubricSize)
        throw MalformedEntry("case score out of range: " + rec.case_id);
    if (rec.success && rec.score < kSuccessScoreThreshold)
        throw MalformedEntry("successful case below success threshold: " + rec.case_id);
    if (rec.duration_ms < 0) throw MalformedEntry("negative duration: " + rec.case_id);
}

template <typename Entry>
bool store_has_id(const std::vector<Entry>& store, const std::string& id) {
    return std::any_of(store.begin(), store.end(),
                       [&](const Entry& e) { return e.id == id; });
}

} // namespace

std::pair<MemoryBank, bool> add_entry(MemoryBank bank, const KnowledgeFact& fact) {
    if (normalize_text(fact.text).empty()) throw MalformedEntry("fact text is empty");
    if (store_has_id(bank.facts, fact.id)) return {std::move(bank), false};
    bank.facts.push_back(fact);
    return {std::move(bank), true};
}

std::pair<MemoryBank, bool> add_entry(MemoryBank bank, const ConstraintRule& rule) {
    if (normalize_text(rule.text).empty()) throw MalformedEntry("constraint text is empty");
    if (store_has_id(bank.constraints, rule.id)) return {std::move(bank), false};
    bank.constraints.push_back(rule);
    return {std::move(bank), true};
}

std::pair<MemoryBank, bool> add_entry(MemoryBank bank, const SkillTemplate& skill) {
    if (skill.steps.empty()) throw MalformedEntry("skill steps are empty");
    for (auto& existing : bank.skills) {
        if (existing.id == skill.id) {
            existing.validation_count += 1;
            return {std::move(bank), true};
        }
    }
    bank.skills.push_back(skill);
    return {std::move(bank), true};
}

std::pair<MemoryBank, bool> add_entry(MemoryBank bank, const CaseRecord& record) {
    require_case_invariants(record);
    auto dup = std::any_of(bank.cases.begin(), bank.cases.end(),
                           [&](const CaseRecord& c) { return c.case_id == record.case_id; });
    if (dup) return {std::move(bank), false};
    bank.cases.push_back(record);
    return {std::move(bank), true};
}

bool bank_has_case(const MemoryBank& bank, const std::string& case_id) {
    return std::any_of(bank.cases.begin(), bank.cases.end(),
                       [&](const CaseRecord& c) { return c.case_id == case_id; });
}

// ---- query -----------------------------------------------------------------

namespace {

// Shared ranking rule: descending relevance, then ascending created_at,
// then ascending id. Skills carry no timestamp and rank as created_at 0.
template <typename Entry, typename TagsOf, typename IdOf, typename AtOf>
std::vector<Entry> rank(const std::vector<Entry>& store, const std::vector<std::string>& task_tags,
                        size_t limit, TagsOf tags_of, IdOf id_of, AtOf at_of) {
    if (limit == 0 || store.empty()) return {};
    struct Row {
        double score;
        int64_t at;
        std::string id;
        const Entry* entry;
    };
    std::vector<Row> rows;
    rows.reserve(store.size());
    for (const auto& e : store) {
        rows.push_back({score_relevance(tags_of(e), task_tags), at_of(e), id_of(e), &e});
    }
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.at != b.at) return a.at < b.at;
        return a.id < b.id;
    });
    std::vector<Entry> out;
    out.reserve(std::min(limit, rows.size()));
    for (const auto& r : rows) {
        if (out.size() == limit) break;
        out.push_back(*r.entry);
    }
    return out;
}

} // namespace

std::vector<KnowledgeFact> query_facts(const MemoryBank& bank,
                                       const std::vector<std::string>& task_tags, size_t limit) {
    return rank(
        bank.facts, task_tags, limit, [](const KnowledgeFact& f) { return f.tags; },
        [](const KnowledgeFact& f) { return f.id; },
        [](const KnowledgeFact& f) { return f.created_at; });
}

std::vector<ConstraintRule> query_constraints(const MemoryBank& bank,
                                              const std::vector<std::string>& task_tags,
                                              size_t limit) {
    return rank(
        bank.constraints, task_tags, limit, [](const ConstraintRule& r) { return r.tags; },
        [](const ConstraintRule& r) { return r.id; },
        [](const ConstraintRule& r) { return r.created_at; });
}

std::vector<SkillTemplate> query_skills(const MemoryBank& bank,
                                        const std::vector<std::string>& task_tags, size_t limit) {
    return rank(
        bank.skills, task_tags, limit,
        [](const SkillTemplate& s) { return s.applicability_tags; },
        [](const SkillTemplate& s) { return s.id; }, [](const SkillTemplate&) { return int64_t{0}; });
}

std::vector<CaseRecord> query_cases(const MemoryBank& bank,
                                    const std::vector<std::string>& task_tags, size_t limit) {
    return rank(
        bank.cases, task_tags, limit,
        [](const CaseRecord& c) { return std::vector<std::string>{fold_text(c.task_category)}; },
        [](const CaseRecord& c) { return c.case_id; },
        [](const CaseRecord& c) { return c.created_at; });
}

// ---- serialization ---------------------------------------------------------

namespace {

ordered_json tags_json(const std::vector<std::string>& tags) {
    return ordered_json(tags);
}

ordered_json fact_json(const KnowledgeFact& f) {
    ordered_json j;
    j["id"] = f.id;
    j["text"] = f.text;
    j["tags"] = tags_json(f.tags);
    j["source_case"] = f.source_case;
    j["created_at"] = f.created_at;
    return j;
}

ordered_json constraint_json(const ConstraintRule& r) {
    ordered_json j;
    j["id"] = r.id;
    j["text"] = r.text;
    if (r.trigger_failure) {
        j["trigger_failure"] = r.trigger_failure->slug();
    } else {
        j["trigger_failure"] = nullptr;
    }
    j["tags"] = tags_json(r.tags);
    j["source_case"] = r.source_case;
    j["created_at"] = r.created_at;
    return j;
}

ordered_json skill_json(const SkillTemplate& s) {
    ordered_json j;
    j["id"] = s.id;
    j["name"] = s.name;
    j["steps"] = ordered_json(s.steps);
    j["applicability_tags"] = tags_json(s.applicability_tags);
    j["validation_count"] = s.validation_count;
    return j;
}

ordered_json case_json(const CaseRecord& c) {
    ordered_json j;
    j["case_id"] = c.case_id;
    j["task_category"] = c.task_category;
    j["summary"] = c.summary;
    j["difficulty"] = c.difficulty;
    j["success"] = c.success;
    j["score"] = c.score;
    j["duration_ms"] = c.duration_ms;
    ordered_json kinds = ordered_json::array();
    for (const auto& k : c.failure_kinds) kinds.push_back(k.slug());
    j["failure_kinds"] = kinds;
    j["created_at"] = c.created_at;
    return j;
}

std::vector<std::string> string_list(const ordered_json& j, const std::string& what) {
    if (!j.is_array()) throw CorruptBundle(what + " is not a list");
    std::vector<std::string> out;
    for (const auto& item : j) {
        if (!item.is_string()) throw CorruptBundle(what + " contains a non-string");
        out.push_back(item.get<std::string>());
    }
    return out;
}

template <typename T>
T field(const ordered_json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) throw CorruptBundle("missing field '" + key + "' in " + where);
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw CorruptBundle("bad field '" + key + "' in " + where);
    }
}

template <typename Entry>
void require_unique_ids(const std::vector<Entry>& store, const std::string& what) {
    std::vector<std::string> ids;
    ids.reserve(store.size());
    for (const auto& e : store) {
        if (e.id.empty()) throw CorruptBundle("empty id in " + what);
        ids.push_back(e.id);
    }
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
        throw CorruptBundle("duplicate id in " + what);
    }
}

} // namespace

ordered_json bank_to_json(const MemoryBank& bank) {
    ordered_json doc;
    doc["schema_version"] = bank.schema_version;
    doc["agent_id"] = bank.agent_id;
    ordered_json facts = ordered_json::array();
    for (const auto& f : bank.facts) facts.push_back(fact_json(f));
    doc["facts"] = facts;
    ordered_json constraints = ordered_json::array();
    for (const auto& r : bank.constraints) constraints.push_back(constraint_json(r));
    doc["constraints"] = constraints;
    ordered_json skills = ordered_json::array();
    for (const auto& s : bank.skills) skills.push_back(skill_json(s));
    doc["skills"] = skills;
    ordered_json cases = ordered_json::array();
    for (const auto& c : bank.cases) cases.push_back(case_json(c));
    doc["cases"] = cases;
    return doc;
}

std::string serialize_bank(const MemoryBank& bank) {
    return bank_to_json(bank).dump(2) + "\n";
}

MemoryBank bank_from_json(const ordered_json& doc) {
    if (!doc.is_object()) throw CorruptBundle("bank document is not an object");
    int version = field<int>(doc, "schema_version", "bank");
    if (version != 1) {
        throw UnsupportedVersion("bank schema_version " + std::to_string(version) +
                                 " is not supported");
    }
    MemoryBank bank;
    bank.schema_version = version;
    bank.agent_id = field<std::string>(doc, "agent_id", "bank");

    for (const auto& j : doc.value("facts", ordered_json::array())) {
        KnowledgeFact f;
        f.id = field<std::string>(j, "id", "fact");
        f.text = field<std::string>(j, "text", "fact");
        if (normalize_text(f.text).empty()) throw CorruptBundle("fact with empty text");
        f.tags = normalize_tags(string_list(j.at("tags"), "fact tags"));
        f.source_case = field<std::string>(j, "source_case", "fact");
        f.created_at = field<int64_t>(j, "created_at", "fact");
        bank.facts.push_back(std::move(f));
    }
    for (const auto& j : doc.value("constraints", ordered_json::array())) {
        ConstraintRule r;
        r.id = field<std::string>(j, "id", "constraint");
        r.text = field<std::string>(j, "text", "constraint");
        if (normalize_text(r.text).empty()) throw CorruptBundle("constraint with empty text");
        if (j.contains("trigger_failure") && !j.at("trigger_failure").is_null()) {
            r.trigger_failure =
                FailureKind::from_slug(field<std::string>(j, "trigger_failure", "constraint"));
        }
        r.tags = normalize_tags(string_list(j.at("tags"), "constraint tags"));
        r.source_case = field<std::string>(j, "source_case", "constraint");
        r.created_at = field<int64_t>(j, "created_at", "constraint");
        bank.constraints.push_back(std::move(r));
    }
    for (const auto& j : doc.value("skills", ordered_json::array())) {
        SkillTemplate s;
        s.id = field<std::string>(j, "id", "skill");
        s.name = field<std::string>(j, "name", "skill");
        s.steps = string_list(j.at("steps"), "skill steps");
        if (s.steps.empty()) throw CorruptBundle("skill with no steps: " + s.name);
        s.applicability_tags = normalize_tags(string_list(j.at("applicability_tags"), "skill tags"));
        s.validation_count = field<int>(j, "validation_count", "skill");
        if (s.validation_count < 1) throw CorruptBundle("skill validation_count < 1: " + s.name);
        bank.skills.push_back(std::move(s));
    }
    for (const auto& j : doc.value("cases", ordered_json::array())) {
        CaseRecord c;
        c.case_id = field<std::string>(j, "case_id", "case");
        c.task_category = field<std::string>(j, "task_category", "case");
        c.summary = field<std::string>(j, "summary", "case");
        c.difficulty = field<double>(j, "difficulty", "case");
        c.success = field<bool>(j, "success", "case");
        c.score = field<int>(j, "score", "case");
        c.duration_ms = field<int64_t>(j, "duration_ms", "case");
        for (const auto& slug : string_list(j.at("failure_kinds"), "case failure_kinds")) {
            c.failure_kinds.push_back(FailureKind::from_slug(slug));
        }
        c.created_at = field<int64_t>(j, "created_at", "case");
        try {
            require_case_invariants(c);
        } catch (const MalformedEntry& e) {
            throw CorruptBundle(std::string("case invariant failed on load: ") + e.what());
        }
        bank.cases.push_back(std::move(c));
    }

    require_unique_ids(bank.facts, "facts");
    require_unique_ids(bank.constraints, "constraints");
    require_unique_ids(bank.skills, "skills");
    {
        std::vector<std::string> ids;
        for (const auto& c : bank.cases) ids.push_back(c.case_id);
        std::sort(ids.begin(), ids.end());
        if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
            throw CorruptBundle("duplicate case_id in cases");
        }
    }
    return bank;
}

MemoryBank deserialize_bank(const std::string& document) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(document);
    } catch (const nlohmann::json::exception& e) {
        throw CorruptBundle(std::string("bank document does not parse: ") + e.what());
    }
    return bank_from_json(doc);
}

MemoryBank ablate(const MemoryBank& bank, const std::set<ModuleKind>& drop) {
    MemoryBank out = bank;
    if (drop.count(ModuleKind::Fact)) out.facts.clear();
    if (drop.count(ModuleKind::Constraint)) out.constraints.clear();
    if (drop.count(ModuleKind::Skill)) out.skills.clear();
    if (drop.count(ModuleKind::Curriculum)) out.cases.clear();
    return out;
}

} // namespace cbl
