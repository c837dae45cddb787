#pragma once
#include "cbl/context_assembler.hpp"
#include "cbl/experience_update.hpp"
#include "cbl/memory_bank.hpp"
#include "cbl/suite.hpp"
#include "cbl/task.hpp"
#include "cbl/trace.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace cbl {

struct CompletionRequest {
    std::string prompt;
    std::string sample_id;
    int64_t deadline_ms = 60000;
    int max_tokens = 4096;
};

struct CompletionResult {
    std::string text;
    int64_t tokens_in = 0;
    int64_t tokens_out = 0;
    int64_t latency_ms = 0;
    std::string backend_error; // empty: none
};

// Completion backend contract. Implementations must be safe for concurrent
// complete() calls.
class Backend {
public:
    virtual ~Backend() = default;
    virtual CompletionResult complete(const CompletionRequest& request) = 0;
    virtual std::string name() const = 0;
};

// Bit-deterministic backend that replays recorded fixtures keyed by
// sample_id. Fixture record fields: text, tokens_in, tokens_out,
// latency_ms, optional error.
class ReplayBackend : public Backend {
public:
    struct Record {
        std::string text;
        int64_t tokens_in = 0;
        int64_t tokens_out = 0;
        int64_t latency_ms = 0;
        std::string error;
    };

    static ReplayBackend load(const std::string& path);
    static ReplayBackend parse(const std::string& document, const std::string& origin = "inline");

    CompletionResult complete(const CompletionRequest& request) override; // FixtureMissing
    std::string name() const override { return "replay"; }

    void put(const std::string& sample_id, Record record); // for scripted scenarios
    size_t size() const { return records_.size(); }
    std::string source_hash() const { return source_hash_; }

private:
    std::map<std::string, Record> records_;
    std::string source_hash_;
};

// HTTP chat-completion provider. Endpoint and model come from a config
// file; the API key is read from the environment (CBL_API_KEY by default).
// The request timeout equals the sample deadline.
struct ProviderConfig {
    std::string endpoint; // e.g. "http://host:port/v1/chat/completions"
    std::string model;
    std::string api_key_env = "CBL_API_KEY";

    static ProviderConfig load(const std::string& path);
};

class ProviderBackend : public Backend {
public:
    explicit ProviderBackend(ProviderConfig config);
    CompletionResult complete(const CompletionRequest& request) override; // BackendUnavailable
    std::string name() const override { return "provider:" + config_.model; }

private:
    ProviderConfig config_;
};

// Execute one sample end to end: assemble the context, call the backend,
// validate the output, and emit the trace. logical_start_ms stamps the
// trace (and everything phi derives from it) deterministically.
ExecutionTrace execute_sample(const MemoryBank& bank, const TaskDefinition& task,
                              const TaskSample& sample, Strategy strategy, Backend& backend,
                              int64_t budget_chars, int64_t logical_start_ms = 0);

struct CaseStep {
    ExecutionTrace trace;
    SampleScore score;
    UpdateDelta delta;
};

struct CaseLoopResult {
    MemoryBank bank;
    std::vector<CaseStep> steps;
    bool partial = false;  // a sample could not execute; steps holds the prefix
    std::string error;     // what stopped the loop, when partial
};

// The closed loop: retrieve -> assemble -> execute -> score -> phi, sample
// by sample, so experience from sample i is available to sample i+1.
CaseLoopResult run_case_loop(MemoryBank bank, const TaskDefinition& task,
                             const std::vector<TaskSample>& samples, Strategy strategy,
                             Backend& backend, const SuiteConfig& suite, int64_t budget_chars);

} // namespace cbl
