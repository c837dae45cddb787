#include "cbl/agent_runtime.hpp"

#include "cbl/errors.hpp"
#include "cbl/eval_harness.hpp"
#include "cbl/text.hpp"

#include "httplib.h"
#include "json.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>

namespace cbl {

using ordered_json = nlohmann::ordered_json;

// ---- replay backend ---------------------------------------------------------

ReplayBackend ReplayBackend::parse(const std::string& document, const std::string& origin) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(document);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("replay fixture " + origin + " does not parse: " + e.what());
    }
    if (doc.value("schema_version", 1) != 1) {
        throw ConfigError("replay fixture " + origin + " has an unsupported schema_version");
    }
    ReplayBackend backend;
    if (!doc.contains("samples") || !doc.at("samples").is_object()) {
        throw ConfigError("replay fixture " + origin + " has no samples object");
    }
    for (const auto& [sample_id, rj] : doc.at("samples").items()) {
        Record rec;
        rec.text = rj.value("text", "");
        rec.tokens_in = rj.value("tokens_in", int64_t{0});
        rec.tokens_out = rj.value("tokens_out", int64_t{0});
        rec.latency_ms = rj.value("latency_ms", int64_t{0});
        rec.error = rj.value("error", "");
        backend.records_.emplace(sample_id, std::move(rec));
    }
    backend.source_hash_ = to_hex64(fnv1a64(document));
    return backend;
}

ReplayBackend ReplayBackend::load(const std::string& path) {
    return parse(read_file(path), path);
}

void ReplayBackend::put(const std::string& sample_id, Record record) {
    records_[sample_id] = std::move(record);
}

CompletionResult ReplayBackend::complete(const CompletionRequest& request) {
    auto it = records_.find(request.sample_id);
    if (it == records_.end()) {
        throw FixtureMissing("no replay fixture for sample " + request.sample_id);
    }
    const Record& rec = it->second;
    CompletionResult res;
    res.text = rec.text;
    res.tokens_in = rec.tokens_in;
    res.tokens_out = rec.tokens_out;
    res.latency_ms = rec.latency_ms;
    res.backend_error = rec.error;
    return res;
}

// ---- provider backend -------------------------------------------------------

ProviderConfig ProviderConfig::load(const std::string& path) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("provider config does not parse: ") + e.what());
    }
    ProviderConfig cfg;
    cfg.endpoint = doc.value("endpoint", "");
    cfg.model = doc.value("model", "");
    cfg.api_key_env = doc.value("api_key_env", "CBL_API_KEY");
    if (cfg.endpoint.empty() || cfg.model.empty()) {
        throw ConfigError("provider config needs endpoint and model");
    }
    return cfg;
}

ProviderBackend::ProviderBackend(ProviderConfig config) : config_(std::move(config)) {}

namespace {

// Split "http://host:port/path" into (scheme://host:port, /path).
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
    auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("provider endpoint needs a scheme: " + endpoint);
    }
    auto path_start = endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {endpoint, "/"};
    return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

} // namespace

CompletionResult ProviderBackend::complete(const CompletionRequest& request) {
    auto [base, path] = split_endpoint(config_.endpoint);
    httplib::Client client(base);
    client.set_connection_timeout(std::max<int64_t>(1, request.deadline_ms / 1000), 0);
    client.set_read_timeout(std::max<int64_t>(1, request.deadline_ms / 1000), 0);

    httplib::Headers headers;
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    ordered_json body;
    body["model"] = config_.model;
    body["max_tokens"] = request.max_tokens;
    body["messages"] = ordered_json::array({ordered_json{{"role", "user"}, {"content", request.prompt}}});

    auto started = std::chrono::steady_clock::now();
    auto res = client.Post(path, headers, body.dump(), "application/json");
    auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::steady_clock::now() - started)
                       .count();
    if (!res) {
        throw BackendUnavailable("provider unreachable: " + config_.endpoint);
    }

    CompletionResult out;
    out.latency_ms = elapsed;
    if (res->status < 200 || res->status >= 300) {
        out.backend_error = "provider returned status " + std::to_string(res->status);
        return out;
    }
    try {
        auto doc = ordered_json::parse(res->body);
        out.text = doc.at("choices").at(0).at("message").at("content").get<std::string>();
        if (doc.contains("usage")) {
            out.tokens_in = doc.at("usage").value("prompt_tokens", int64_t{0});
            out.tokens_out = doc.at("usage").value("completion_tokens", int64_t{0});
        }
    } catch (const nlohmann::json::exception& e) {
        out.backend_error = std::string("malformed provider response: ") + e.what();
    }
    return out;
}

// ---- execution --------------------------------------------------------------

ExecutionTrace execute_sample(const MemoryBank& bank, const TaskDefinition& task,
                              const TaskSample& sample, Strategy strategy, Backend& backend,
                              int64_t budget_chars, int64_t logical_start_ms) {
    PromptContext ctx = assemble(bank, task, sample, strategy, budget_chars);
    std::string prompt = render(ctx);

    CompletionRequest request;
    request.prompt = prompt;
    request.sample_id = sample.sample_id;
    request.deadline_ms = task.deadline_ms;

    CompletionResult result = backend.complete(request);

    ExecutionTrace trace;
    trace.case_id = sample.sample_id;
    trace.task_category = task.category_id;
    trace.started_at_ms = logical_start_ms;
    trace.tokens_in = result.tokens_in;
    trace.tokens_out = result.tokens_out;
    trace.duration_ms = result.latency_ms;

    int seq = 0;
    trace.events.push_back({seq++, "model_call", prompt, 0});
    if (!result.backend_error.empty()) {
        trace.events.push_back({seq++, "error", result.backend_error, result.latency_ms});
        trace.exit = ExitStatus::Aborted;
        trace.final_output = result.text;
    } else {
        trace.events.push_back({seq++, "output", result.text, result.latency_ms});
        trace.exit = ExitStatus::Completed;
        trace.final_output = result.text;
        const std::string folded = fold_text(result.text);
        for (const auto& validator : task.validators) {
            bool ok = false;
            for (const auto& marker : validator.required_any) {
                if (contains_folded(folded, marker)) {
                    ok = true;
                    break;
                }
            }
            std::string payload =
                ok ? "schema check '" + validator.id + "' passed"
                   : "schema validation failed: " + validator.id + ": " + validator.message;
            trace.events.push_back({seq++, "validation", payload, result.latency_ms});
        }
    }
    validate_trace(trace);
    return trace;
}

CaseLoopResult run_case_loop(MemoryBank bank, const TaskDefinition& task,
                             const std::vector<TaskSample>& samples, Strategy strategy,
                             Backend& backend, const SuiteConfig& suite, int64_t budget_chars) {
    if (samples.empty()) throw ConfigError("case loop needs at least one sample");
    {
        std::set<std::string> ids;
        for (const auto& s : samples) {
            if (!ids.insert(s.sample_id).second) {
                throw ConfigError("duplicate sample id in case loop: " + s.sample_id);
            }
        }
    }

    CaseLoopResult result;
    PhiOptions phi = suite.phi_options();
    for (size_t i = 0; i < samples.size(); ++i) {
        ExecutionTrace trace;
        try {
            trace = execute_sample(bank, task, samples[i], strategy, backend, budget_chars,
                                   static_cast<int64_t>(i));
        } catch (const Error& e) {
            result.partial = true;
            result.error = e.what();
            break;
        }
        SampleScore score = score_sample(task, trace, suite.detectors);
        auto [updated, delta] = apply_phi(std::move(bank), trace, score, task, phi);
        bank = std::move(updated);
        result.steps.push_back({std::move(trace), std::move(score), std::move(delta)});
    }
    result.bank = std::move(bank);
    return result;
}

} // namespace cbl
