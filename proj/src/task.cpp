#include "cbl/task.hpp"

#include "cbl/errors.hpp"
#include "cbl/text.hpp"

#include <regex>

namespace cbl {

MatchRule MatchRule::keyword_any(std::vector<std::string> keywords) {
    MatchRule r;
    r.type = Type::KeywordAny;
    r.keywords = std::move(keywords);
    return r;
}

MatchRule MatchRule::regex(std::string pattern) {
    MatchRule r;
    r.type = Type::Regex;
    r.pattern = std::move(pattern);
    return r;
}

bool MatchRule::matches(const std::string& folded_output) const {
    if (type == Type::KeywordAny) {
        for (const auto& kw : keywords) {
            if (contains_folded(folded_output, kw)) return true;
        }
        return false;
    }
    std::regex re(pattern, std::regex::ECMAScript | std::regex::icase);
    return std::regex_search(folded_output, re);
}

const Checkpoint* TaskDefinition::find_checkpoint(const std::string& id) const {
    for (const auto& cp : rubric) {
        if (cp.id == id) return &cp;
    }
    return nullptr;
}

const Checkpoint& TaskDefinition::primary_checkpoint() const {
    for (const auto& cp : rubric) {
        if (cp.primary) return cp;
    }
    throw ConfigError("task " + category_id + " has no primary checkpoint");
}

void validate_task(const TaskDefinition& task) {
    if (task.category_id.empty()) throw ConfigError("task without category_id");
    if (task.prompt_variants.size() != 5) {
        throw ConfigError("task " + task.category_id + " must have exactly 5 prompt variants");
    }
    if (task.rounds != 3) {
        throw ConfigError("task " + task.category_id + " must run exactly 3 rounds");
    }
    if (task.rubric.size() != static_cast<size_t>(kRubricSize)) {
        throw ConfigError("task " + task.category_id + " rubric must have exactly 4 checkpoints");
    }
    int primaries = 0;
    for (const auto& cp : task.rubric) {
        if (cp.id.empty()) throw ConfigError("checkpoint without id in " + task.category_id);
        if (cp.primary) ++primaries;
        if (!cp.skill_name.empty() && cp.skill_steps.empty()) {
            throw ConfigError("checkpoint " + cp.id + " declares a skill without steps");
        }
    }
    if (primaries != 1) {
        throw ConfigError("task " + task.category_id + " must flag exactly one primary checkpoint");
    }
    if (task.deadline_ms <= 0) throw ConfigError("task " + task.category_id + " needs a deadline");
}

std::string sample_id_for(const std::string& category_id, int round, int variant) {
    return category_id + "/r" + std::to_string(round) + "v" + std::to_string(variant);
}

std::vector<TaskSample> make_samples(const TaskDefinition& task) {
    std::vector<TaskSample> samples;
    samples.reserve(static_cast<size_t>(task.rounds) * task.prompt_variants.size());
    for (int round = 1; round <= task.rounds; ++round) {
        for (int variant = 1; variant <= static_cast<int>(task.prompt_variants.size()); ++variant) {
            TaskSample s;
            s.sample_id = sample_id_for(task.category_id, round, variant);
            s.category_id = task.category_id;
            s.round = round;
            s.variant = variant;
            s.prompt_text = task.prompt_variants[static_cast<size_t>(variant - 1)];
            samples.push_back(std::move(s));
        }
    }
    return samples;
}

} // namespace cbl
