#pragma once
#include <string>

namespace cbl {

enum class FailureTag {
    Timeout,
    RuntimeError,
    BlankOutput,
    LoopDetected,
    SchemaValidationFailure,
    Other,
};

// One standardized failure category. `label` is non-empty only for Other.
struct FailureKind {
    FailureTag tag = FailureTag::Other;
    std::string label;

    static FailureKind timeout() { return {FailureTag::Timeout, {}}; }
    static FailureKind runtime_error() { return {FailureTag::RuntimeError, {}}; }
    static FailureKind blank_output() { return {FailureTag::BlankOutput, {}}; }
    static FailureKind loop_detected() { return {FailureTag::LoopDetected, {}}; }
    static FailureKind schema_validation_failure() {
        return {FailureTag::SchemaValidationFailure, {}};
    }
    static FailureKind other(const std::string& label); // throws MalformedEntry on empty label

    // "timeout", "runtime_error", "blank_output", "loop_detected",
    // "schema_validation_failure", "other:<label>"
    std::string slug() const;
    static FailureKind from_slug(const std::string& slug);

    bool operator==(const FailureKind& rhs) const = default;
};

} // namespace cbl
