#include "cbl/failure.hpp"

#include "cbl/errors.hpp"
#include "cbl/text.hpp"

namespace cbl {

FailureKind FailureKind::other(const std::string& label) {
    if (normalize_text(label).empty()) {
        throw MalformedEntry("Other failure kind requires a non-empty label");
    }
    return {FailureTag::Other, label};
}

std::string FailureKind::slug() const {
    switch (tag) {
        case FailureTag::Timeout: return "timeout";
        case FailureTag::RuntimeError: return "runtime_error";
        case FailureTag::BlankOutput: return "blank_output";
        case FailureTag::LoopDetected: return "loop_detected";
        case FailureTag::SchemaValidationFailure: return "schema_validation_failure";
        case FailureTag::Other: return "other:" + label;
    }
    return "other:" + label;
}

FailureKind FailureKind::from_slug(const std::string& slug) {
    if (slug == "timeout") return timeout();
    if (slug == "runtime_error") return runtime_error();
    if (slug == "blank_output") return blank_output();
    if (slug == "loop_detected") return loop_detected();
    if (slug == "schema_validation_failure") return schema_validation_failure();
    if (slug.rfind("other:", 0) == 0) return other(slug.substr(6));
    throw CorruptBundle("unknown failure kind: " + slug);
}

} // namespace cbl
