#include "cbl/suite.hpp"

#include "cbl/errors.hpp"
#include "cbl/text.hpp"

#include "json.hpp"

namespace cbl {

using ordered_json = nlohmann::ordered_json;

namespace {

std::vector<std::string> string_list(const ordered_json& j, const std::string& what) {
    if (!j.is_array()) throw ConfigError(what + " is not a list");
    std::vector<std::string> out;
    for (const auto& item : j) {
        if (!item.is_string()) throw ConfigError(what + " contains a non-string");
        out.push_back(item.get<std::string>());
    }
    return out;
}

MatchRule parse_rule(const ordered_json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError("pattern in " + where + " is not an object");
    std::string type = j.value("type", "keyword_any");
    if (type == "keyword_any") {
        auto keywords = string_list(j.at("keywords"), where + " keywords");
        if (keywords.empty()) throw ConfigError("empty keyword list in " + where);
        return MatchRule::keyword_any(std::move(keywords));
    }
    if (type == "regex") {
        std::string pattern = j.at("pattern").get<std::string>();
        if (pattern.empty()) throw ConfigError("empty regex in " + where);
        return MatchRule::regex(std::move(pattern));
    }
    throw ConfigError("unknown pattern type '" + type + "' in " + where);
}

TaskDefinition parse_task(const ordered_json& j) {
    TaskDefinition task;
    task.category_id = j.at("category_id").get<std::string>();
    const std::string where = "task " + task.category_id;
    task.description = j.value("description", "");
    task.tags = normalize_tags(string_list(j.at("tags"), where + " tags"));
    task.deadline_ms = j.at("deadline_ms").get<int64_t>();
    task.rounds = j.value("rounds", 3);
    task.prompt_variants = string_list(j.at("prompt_variants"), where + " prompt_variants");
    task.checklist_steps = string_list(j.at("checklist_steps"), where + " checklist_steps");

    for (const auto& cj : j.at("rubric")) {
        Checkpoint cp;
        cp.id = cj.at("id").get<std::string>();
        cp.pattern = parse_rule(cj.at("pattern"), where + " checkpoint " + cp.id);
        cp.primary = cj.value("primary", false);
        cp.skill_name = cj.value("skill_name", "");
        if (cj.contains("skill_steps")) {
            cp.skill_steps = string_list(cj.at("skill_steps"), where + " skill_steps");
        }
        task.rubric.push_back(std::move(cp));
    }
    if (j.contains("signals")) {
        for (const auto& sj : j.at("signals")) {
            SignalSpec sig;
            sig.id = sj.at("id").get<std::string>();
            sig.pattern = parse_rule(sj.at("pattern"), where + " signal " + sig.id);
            sig.task_category = task.category_id;
            task.signals.push_back(std::move(sig));
        }
    }
    if (j.contains("validators")) {
        for (const auto& vj : j.at("validators")) {
            ValidatorSpec v;
            v.id = vj.at("id").get<std::string>();
            v.required_any = string_list(vj.at("required_any"), where + " validator " + v.id);
            v.message = vj.value("message", "required output marker missing");
            task.validators.push_back(std::move(v));
        }
    }
    validate_task(task);
    return task;
}

} // namespace

const TaskDefinition* SuiteConfig::find_task(const std::string& category_id) const {
    for (const auto& t : tasks) {
        if (t.category_id == category_id) return &t;
    }
    return nullptr;
}

PhiOptions SuiteConfig::phi_options() const {
    PhiOptions opt;
    opt.detectors = detectors;
    opt.templates = templates;
    opt.weights = weights;
    return opt;
}

SuiteConfig parse_suite(const std::string& document) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(document);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("suite does not parse: ") + e.what());
    }
    SuiteConfig suite;
    suite.schema_version = doc.value("schema_version", 1);
    if (suite.schema_version != 1) {
        throw ConfigError("unsupported suite schema_version");
    }
    if (doc.contains("detectors")) {
        const auto& dj = doc.at("detectors");
        suite.detectors.version = dj.value("version", 1);
        suite.detectors.timeout_pattern =
            dj.value("timeout_pattern", suite.detectors.timeout_pattern);
        suite.detectors.runtime_error_pattern =
            dj.value("runtime_error_pattern", suite.detectors.runtime_error_pattern);
        suite.detectors.schema_failure_pattern =
            dj.value("schema_failure_pattern", suite.detectors.schema_failure_pattern);
        suite.detectors.loop_threshold = dj.value("loop_threshold", suite.detectors.loop_threshold);
        if (dj.contains("custom")) {
            for (const auto& cj : dj.at("custom")) {
                DetectorTable::CustomDetector det;
                det.label = cj.at("label").get<std::string>();
                det.event_kind = cj.at("event_kind").get<std::string>();
                det.pattern = cj.at("pattern").get<std::string>();
                suite.detectors.custom.push_back(std::move(det));
            }
        }
    }
    if (doc.contains("constraint_templates")) {
        for (const auto& [key, value] : doc.at("constraint_templates").items()) {
            suite.templates.text_by_kind[key] = value.get<std::string>();
        }
    }
    if (doc.contains("curriculum")) {
        const auto& cj = doc.at("curriculum");
        suite.weights.failure_weight = cj.value("failure_weight", suite.weights.failure_weight);
        suite.weights.score_weight = cj.value("score_weight", suite.weights.score_weight);
        suite.weights.duration_weight = cj.value("duration_weight", suite.weights.duration_weight);
    }
    suite.few_shot_k = doc.value("few_shot_k", 3);
    if (suite.few_shot_k < 1) throw ConfigError("few_shot_k must be >= 1");

    if (!doc.contains("tasks") || !doc.at("tasks").is_array()) {
        throw ConfigError("suite has no task list");
    }
    for (const auto& tj : doc.at("tasks")) {
        try {
            suite.tasks.push_back(parse_task(tj));
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("bad task definition: ") + e.what());
        }
    }
    for (size_t i = 0; i < suite.tasks.size(); ++i) {
        for (size_t k = i + 1; k < suite.tasks.size(); ++k) {
            if (suite.tasks[i].category_id == suite.tasks[k].category_id) {
                throw ConfigError("duplicate task category: " + suite.tasks[i].category_id);
            }
        }
    }
    suite.source_hash = to_hex64(fnv1a64(document));
    return suite;
}

SuiteConfig load_suite(const std::string& path) {
    return parse_suite(read_file(path));
}

} // namespace cbl
