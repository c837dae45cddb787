#include "cbl/context_assembler.hpp"

#include "cbl/curriculum.hpp"
#include "cbl/errors.hpp"
#include "cbl/text.hpp"

#include <algorithm>

namespace cbl {

std::string Strategy::slug() const {
    switch (kind) {
        case StrategyKind::Cbl: return "cbl";
        case StrategyKind::ZeroShot: return "zero-shot";
        case StrategyKind::FewShot: return "few-shot";
        case StrategyKind::Checklist: return "checklist";
        case StrategyKind::RuleMemory: return "rule-memory";
    }
    return "cbl";
}

Strategy Strategy::from_slug(const std::string& slug, int few_shot_k) {
    if (slug == "cbl") return cbl();
    if (slug == "zero-shot") return zero_shot();
    if (slug == "few-shot") return few_shot(few_shot_k);
    if (slug == "checklist") return checklist();
    if (slug == "rule-memory") return rule_memory();
    throw ConfigError("unknown strategy: " + slug);
}

const std::vector<std::string>& all_strategy_slugs() {
    static const std::vector<std::string> slugs = {"cbl", "zero-shot", "few-shot", "checklist",
                                                   "rule-memory"};
    return slugs;
}

double score_relevance(const std::vector<std::string>& entry_tags,
                       const std::vector<std::string>& task_tags) {
    auto a = normalize_tags(entry_tags);
    auto b = normalize_tags(task_tags);
    size_t intersection = 0;
    size_t i = 0, k = 0;
    while (i < a.size() && k < b.size()) {
        if (a[i] == b[k]) {
            ++intersection;
            ++i;
            ++k;
        } else if (a[i] < b[k]) {
            ++i;
        } else {
            ++k;
        }
    }
    size_t unions = a.size() + b.size() - intersection;
    return static_cast<double>(intersection) / static_cast<double>(std::max<size_t>(1, unions));
}

namespace {

// Budget-aware section body builder: lines join with single newlines and a
// line that does not fit ends the section (entries are never split).
class SectionBuilder {
public:
    explicit SectionBuilder(int64_t* remaining) : remaining_(remaining) {}

    bool add_line(const std::string& line) {
        int64_t cost = static_cast<int64_t>(line.size()) + (body_.empty() ? 0 : 1);
        if (cost > *remaining_) return false;
        *remaining_ -= cost;
        if (!body_.empty()) body_ += '\n';
        body_ += line;
        return true;
    }

    bool empty() const { return body_.empty(); }
    std::string take() { return std::move(body_); }

private:
    int64_t* remaining_;
    std::string body_;
};

std::string fact_line(const KnowledgeFact& f) { return "- " + f.text; }
std::string rule_line(const ConstraintRule& r) { return "- " + r.text; }

std::string skill_line(const SkillTemplate& s) {
    return "- " + s.name + ": " + join(s.steps, "; ");
}

std::string checklist_line(size_t index, const std::string& step) {
    return std::to_string(index + 1) + ". " + step;
}

} // namespace

PromptContext assemble(const MemoryBank& bank, const TaskDefinition& task,
                       const TaskSample& sample, Strategy strategy, int64_t budget_chars) {
    const std::string& task_text = sample.prompt_text;
    if (budget_chars < static_cast<int64_t>(task_text.size())) {
        throw BudgetTooSmall("budget " + std::to_string(budget_chars) +
                             " cannot hold the task text for " + sample.sample_id);
    }
    int64_t remaining = budget_chars - static_cast<int64_t>(task_text.size());

    PromptContext ctx;
    ctx.task_text = task_text;
    ctx.strategy = strategy;

    const size_t unlimited = bank.facts.size() + bank.constraints.size() + bank.skills.size() +
                             bank.cases.size() + 1;

    switch (strategy.kind) {
        case StrategyKind::ZeroShot:
            break; // task only, no sections

        case StrategyKind::FewShot: {
            SectionBuilder body(&remaining);
            auto examples =
                query_cases(bank, task.tags, static_cast<size_t>(std::max(0, strategy.few_shot_k)));
            for (const auto& rec : examples) {
                if (!body.add_line(render_case_summary(rec))) break;
            }
            if (!body.empty()) ctx.sections.emplace_back("EXAMPLES", body.take());
            break;
        }

        case StrategyKind::Checklist: {
            SectionBuilder body(&remaining);
            for (size_t i = 0; i < task.checklist_steps.size(); ++i) {
                if (!body.add_line(checklist_line(i, task.checklist_steps[i]))) break;
            }
            if (!body.empty()) ctx.sections.emplace_back("CHECKLIST", body.take());
            break;
        }

        case StrategyKind::RuleMemory: {
            SectionBuilder body(&remaining);
            const std::string category = fold_text(task.category_id);
            for (const auto& rule : query_constraints(bank, task.tags, unlimited)) {
                bool matches_category =
                    std::find(rule.tags.begin(), rule.tags.end(), category) != rule.tags.end();
                if (!matches_category) continue;
                if (!body.add_line(rule_line(rule))) break;
            }
            if (!body.empty()) ctx.sections.emplace_back("RULES", body.take());
            break;
        }

        case StrategyKind::Cbl: {
            // Budget is granted in truncation-priority order: constraints
            // survive longest, then facts, skills, and prior cases.
            SectionBuilder constraints(&remaining);
            for (const auto& rule : query_constraints(bank, task.tags, unlimited)) {
                if (!constraints.add_line(rule_line(rule))) break;
            }
            SectionBuilder facts(&remaining);
            for (const auto& fact : query_facts(bank, task.tags, unlimited)) {
                if (!facts.add_line(fact_line(fact))) break;
            }
            SectionBuilder skills(&remaining);
            for (const auto& skill : query_skills(bank, task.tags, unlimited)) {
                if (!skills.add_line(skill_line(skill))) break;
            }
            // Prior cases go through the curriculum: easier-first order,
            // greedy prefix within whatever budget is left.
            auto order = order_cases(bank.cases);
            std::string cases_body;
            for (const auto& rec : select_for_context(order, bank.cases, remaining)) {
                if (!cases_body.empty()) cases_body += '\n';
                cases_body += render_case_summary(rec);
            }
            remaining -= static_cast<int64_t>(cases_body.size());
            // Fixed display order, independent of the allocation order above.
            if (!facts.empty()) ctx.sections.emplace_back("DOMAIN KNOWLEDGE", facts.take());
            if (!constraints.empty()) ctx.sections.emplace_back("CONSTRAINTS", constraints.take());
            if (!skills.empty()) ctx.sections.emplace_back("SKILLS", skills.take());
            if (!cases_body.empty()) ctx.sections.emplace_back("PRIOR CASES", std::move(cases_body));
            break;
        }
    }

    ctx.char_count = static_cast<int64_t>(task_text.size());
    for (const auto& [label, body] : ctx.sections) {
        ctx.char_count += static_cast<int64_t>(body.size());
    }
    return ctx;
}

std::string render(const PromptContext& ctx) {
    std::string out;
    out.reserve(static_cast<size_t>(ctx.char_count) + 16 * (ctx.sections.size() + 1));
    for (const auto& [label, body] : ctx.sections) {
        out += "## ";
        out += label;
        out += '\n';
        out += body;
        out += "\n\n";
    }
    out += "## TASK\n";
    out += ctx.task_text;
    return out;
}

} // namespace cbl
