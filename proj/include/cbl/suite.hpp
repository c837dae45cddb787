#pragma once
#include "cbl/curriculum.hpp"
#include "cbl/experience_update.hpp"
#include "cbl/task.hpp"

#include <string>
#include <vector>

namespace cbl {

// Suite-level configuration: the task set plus the shared knobs (detector
// table, constraint templates, curriculum weights, few-shot size).
struct SuiteConfig {
    int schema_version = 1;
    std::vector<TaskDefinition> tasks;
    DetectorTable detectors;
    ConstraintTemplates templates = ConstraintTemplates::defaults();
    CurriculumWeights weights;
    int few_shot_k = 3;
    std::string source_hash; // fnv1a64 of the file bytes, for report provenance

    const TaskDefinition* find_task(const std::string& category_id) const;
    PhiOptions phi_options() const;
};

SuiteConfig load_suite(const std::string& path);        // ConfigError on any problem
SuiteConfig parse_suite(const std::string& document);    // same, from a string

} // namespace cbl
