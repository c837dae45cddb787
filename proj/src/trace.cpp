#include "cbl/trace.hpp"

#include "cbl/errors.hpp"
#include "cbl/text.hpp"

#include "json.hpp"

namespace cbl {

using ordered_json = nlohmann::ordered_json;

void validate_trace(const ExecutionTrace& trace) {
    if (trace.case_id.empty()) throw InvalidTrace("trace without case_id");
    if (trace.tokens_in < 0 || trace.tokens_out < 0) {
        throw InvalidTrace("negative token count in trace " + trace.case_id);
    }
    int last_seq = -1;
    int64_t last_at = 0;
    for (const auto& ev : trace.events) {
        if (ev.seq <= last_seq) {
            throw InvalidTrace("event seq not strictly increasing in trace " + trace.case_id);
        }
        if (ev.at_ms < last_at) {
            throw InvalidTrace("event at_ms decreasing in trace " + trace.case_id);
        }
        last_seq = ev.seq;
        last_at = ev.at_ms;
    }
    if (trace.duration_ms < last_at) {
        throw InvalidTrace("duration_ms shorter than last event in trace " + trace.case_id);
    }
}

std::string serialize_trace(const ExecutionTrace& trace) {
    ordered_json doc;
    doc["case_id"] = trace.case_id;
    doc["task_category"] = trace.task_category;
    doc["started_at_ms"] = trace.started_at_ms;
    ordered_json events = ordered_json::array();
    for (const auto& ev : trace.events) {
        ordered_json e;
        e["seq"] = ev.seq;
        e["kind"] = ev.kind;
        e["payload"] = ev.payload;
        e["at_ms"] = ev.at_ms;
        events.push_back(e);
    }
    doc["events"] = events;
    doc["final_output"] = trace.final_output;
    doc["duration_ms"] = trace.duration_ms;
    doc["tokens_in"] = trace.tokens_in;
    doc["tokens_out"] = trace.tokens_out;
    doc["exit"] = trace.exit == ExitStatus::Completed ? "completed" : "aborted";
    return doc.dump(2) + "\n";
}

ExecutionTrace deserialize_trace(const std::string& document) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(document);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidTrace(std::string("trace does not parse: ") + e.what());
    }
    ExecutionTrace trace;
    try {
        trace.case_id = doc.at("case_id").get<std::string>();
        trace.task_category = doc.at("task_category").get<std::string>();
        trace.started_at_ms = doc.value("started_at_ms", int64_t{0});
        for (const auto& e : doc.at("events")) {
            TraceEvent ev;
            ev.seq = e.at("seq").get<int>();
            ev.kind = e.at("kind").get<std::string>();
            ev.payload = e.at("payload").get<std::string>();
            ev.at_ms = e.at("at_ms").get<int64_t>();
            trace.events.push_back(std::move(ev));
        }
        trace.final_output = doc.at("final_output").get<std::string>();
        trace.duration_ms = doc.at("duration_ms").get<int64_t>();
        trace.tokens_in = doc.at("tokens_in").get<int64_t>();
        trace.tokens_out = doc.at("tokens_out").get<int64_t>();
        std::string exit = doc.at("exit").get<std::string>();
        if (exit == "completed") {
            trace.exit = ExitStatus::Completed;
        } else if (exit == "aborted") {
            trace.exit = ExitStatus::Aborted;
        } else {
            throw InvalidTrace("unknown exit status: " + exit);
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidTrace(std::string("trace field error: ") + e.what());
    }
    validate_trace(trace);
    return trace;
}

ExecutionTrace load_trace_file(const std::string& path) {
    return deserialize_trace(read_file(path));
}

} // namespace cbl
