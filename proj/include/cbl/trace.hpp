#pragma once
#include <cstdint>
#include <string>
#include <vector>

namespace cbl {

// One step of an execution. Kinds used by the runtime: "model_call",
// "tool_call", "output", "error", "validation".
struct TraceEvent {
    int seq = 0;
    std::string kind;
    std::string payload;
    int64_t at_ms = 0; // offset from trace start

    bool operator==(const TraceEvent&) const = default;
};

enum class ExitStatus { Completed, Aborted };

// Ordered record of one task attempt. started_at_ms is a logical clock
// supplied by the caller (the case loop uses the sample index), so entries
// derived from a trace get deterministic timestamps.
struct ExecutionTrace {
    std::string case_id;
    std::string task_category;
    int64_t started_at_ms = 0;
    std::vector<TraceEvent> events;
    std::string final_output;
    int64_t duration_ms = 0;
    int64_t tokens_in = 0;
    int64_t tokens_out = 0;
    ExitStatus exit = ExitStatus::Completed;

    bool operator==(const ExecutionTrace&) const = default;
};

// Throws InvalidTrace unless seq is strictly increasing, at_ms non-decreasing,
// duration_ms >= the last event offset, and token counts are non-negative.
void validate_trace(const ExecutionTrace& trace);

std::string serialize_trace(const ExecutionTrace& trace);
ExecutionTrace deserialize_trace(const std::string& document);
ExecutionTrace load_trace_file(const std::string& path);

} // namespace cbl
