#include "cbl/cli.hpp"

#include "cbl/agent_runtime.hpp"
#include "cbl/context_assembler.hpp"
#include "cbl/errors.hpp"
#include "cbl/eval_harness.hpp"
#include "cbl/memory_bank.hpp"
#include "cbl/suite.hpp"
#include "cbl/text.hpp"
#include "cbl/transfer.hpp"

#include <chrono>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>

namespace cbl::cli {

namespace fs = std::filesystem;

namespace {

constexpr int64_t kDefaultBudgetChars = 20000;

struct Options {
    std::vector<std::string> positional;
    std::map<std::string, std::string> flags;
    std::vector<std::string> drops; // --drop is repeatable

    bool has(const std::string& key) const { return flags.count(key) > 0; }
    std::string get(const std::string& key, const std::string& fallback = "") const {
        auto it = flags.find(key);
        return it == flags.end() ? fallback : it->second;
    }
};

Options parse_options(const std::vector<std::string>& args, size_t start) {
    Options opts;
    for (size_t i = start; i < args.size(); ++i) {
        const std::string& arg = args[i];
        if (arg.rfind("--", 0) == 0) {
            std::string key = arg.substr(2);
            if (i + 1 >= args.size()) throw ConfigError("flag --" + key + " needs a value");
            std::string value = args[++i];
            if (key == "drop") {
                opts.drops.push_back(value);
            } else {
                opts.flags[key] = value;
            }
        } else {
            opts.positional.push_back(arg);
        }
    }
    return opts;
}

std::string require_flag(const Options& opts, const std::string& key) {
    if (!opts.has(key)) throw ConfigError("missing required flag --" + key);
    return opts.get(key);
}

int64_t budget_of(const Options& opts) {
    if (!opts.has("budget")) return kDefaultBudgetChars;
    return std::stoll(opts.get("budget"));
}

// "replay=<path>" or "provider=<config.json>".
struct BackendSpec {
    bool replay = true;
    std::string path;
};

BackendSpec parse_backend(const std::string& spec) {
    auto eq = spec.find('=');
    if (eq == std::string::npos) throw ConfigError("backend spec must be replay=PATH or provider=CONFIG");
    std::string mode = spec.substr(0, eq);
    std::string path = spec.substr(eq + 1);
    if (path.empty()) throw ConfigError("backend spec has an empty path");
    if (mode == "replay") return {true, path};
    if (mode == "provider") return {false, path};
    throw ConfigError("unknown backend mode: " + mode);
}

// Per-method fixture path: a directory maps methods onto <dir>/<slug>.json,
// a plain file serves every method.
std::string replay_path_for(const std::string& base, const std::string& slug) {
    if (fs::is_directory(base)) return base + "/" + slug + ".json";
    return base;
}

MemoryBank load_start_bank(const Options& opts) {
    if (opts.has("bank")) return deserialize_bank(read_file(opts.get("bank")));
    return make_bank(opts.get("agent", "agent"));
}

std::string ensure_run_dir(const std::string& out_root, const std::string& run_id) {
    fs::path dir = fs::path(out_root) / run_id;
    fs::create_directories(dir);
    return dir.string();
}

int64_t now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

// ---- subcommands ----

int cmd_init(const Options& opts) {
    std::string agent = require_flag(opts, "agent");
    std::string out = require_flag(opts, "out");
    write_file(out, serialize_bank(make_bank(agent)));
    std::cout << "created bank for agent '" << agent << "' at " << out << "\n";
    return 0;
}

int run_methods(const Options& opts, const std::vector<std::string>& methods) {
    SuiteConfig suite = load_suite(require_flag(opts, "suite"));
    BackendSpec backend_spec = parse_backend(require_flag(opts, "backend"));
    std::string out_root = require_flag(opts, "out");
    int64_t budget = budget_of(opts);
    MemoryBank bank0 = load_start_bank(opts);

    EvalReport report;
    for (const auto& task : suite.tasks) report.task_order.push_back(task.category_id);
    report.provenance.suite_hash = suite.source_hash;

    std::string fixture_hashes;
    std::unique_ptr<ProviderBackend> provider;
    if (!backend_spec.replay) {
        provider = std::make_unique<ProviderBackend>(ProviderConfig::load(backend_spec.path));
    }
    for (const auto& slug : methods) {
        Strategy strategy = Strategy::from_slug(slug, suite.few_shot_k);
        if (backend_spec.replay) {
            ReplayBackend backend = ReplayBackend::load(replay_path_for(backend_spec.path, slug));
            fixture_hashes += backend.source_hash();
            report.provenance.backend = backend.name();
            report.runs.push_back(run_protocol(suite, strategy, backend, bank0, budget));
        } else {
            report.provenance.backend = provider->name();
            report.runs.push_back(run_protocol(suite, strategy, *provider, bank0, budget));
        }
    }
    report.provenance.fixture_hash =
        fixture_hashes.empty() ? "none" : to_hex64(fnv1a64(fixture_hashes));

    if (methods.size() > 1) compare(report);

    std::string run_id = to_hex64(fnv1a64("eval:" + suite.source_hash + ":" +
                                          report.provenance.fixture_hash + ":" +
                                          join(methods, ",")));
    std::string dir = ensure_run_dir(out_root, run_id);
    write_file(dir + "/report.json", report_to_json(report));
    write_file(dir + "/report.txt", render_report_text(report));
    std::cout << render_report_text(report);
    std::cout << "report written to " << dir << "/report.json\n";
    return 0;
}

int cmd_run(const Options& opts) {
    return run_methods(opts, {require_flag(opts, "strategy")});
}

int cmd_eval_all(const Options& opts) {
    return run_methods(opts, all_strategy_slugs());
}

int cmd_ablate(const Options& opts) {
    SuiteConfig suite = load_suite(require_flag(opts, "suite"));
    std::string bundle_doc = read_file(require_flag(opts, "bundle"));
    std::string fixtures = require_flag(opts, "fixtures");
    std::string out_root = require_flag(opts, "out");
    int64_t budget = budget_of(opts);

    std::vector<std::string> diagnostics;
    std::string spec = opts.get("diagnostics", "enterprise_rag,tool_orchestration");
    size_t pos = 0;
    while (pos < spec.size()) {
        size_t comma = spec.find(',', pos);
        if (comma == std::string::npos) comma = spec.size();
        std::string id = spec.substr(pos, comma - pos);
        if (!id.empty()) diagnostics.push_back(id);
        pos = comma + 1;
    }

    AblationReport report = run_ablation(suite, bundle_doc, diagnostics, fixtures, budget);
    std::string run_id = to_hex64(fnv1a64("ablate:" + suite.source_hash + ":" +
                                          report.provenance.fixture_hash));
    std::string dir = ensure_run_dir(out_root, run_id);
    write_file(dir + "/ablation.json", ablation_to_json(report));
    write_file(dir + "/ablation.txt", render_ablation_text(report));
    std::cout << render_ablation_text(report);
    std::cout << "report written to " << dir << "/ablation.json\n";
    return 0;
}

int cmd_export(const Options& opts) {
    MemoryBank bank = deserialize_bank(read_file(require_flag(opts, "bank")));
    std::string out = require_flag(opts, "out");
    int64_t exported_at = opts.has("exported-at") ? std::stoll(opts.get("exported-at")) : now_ms();
    write_file(out, make_bundle(bank, exported_at));
    BundleManifest manifest = read_manifest(read_file(out));
    std::cout << "exported bundle for agent '" << manifest.source_agent << "' (hash "
              << manifest.content_hash << ") to " << out << "\n";
    return 0;
}

int cmd_import(const Options& opts) {
    if (opts.positional.empty()) throw ConfigError("import needs a bundle path");
    std::string bundle_doc = read_file(opts.positional.front());
    std::string agent = require_flag(opts, "agent");
    std::string out = require_flag(opts, "out");

    std::set<ModuleKind> drop;
    for (const auto& slug : opts.drops) drop.insert(module_kind_from_slug(slug));

    std::optional<MemoryBank> merge_into;
    if (opts.has("merge-into")) {
        merge_into = deserialize_bank(read_file(opts.get("merge-into")));
    }
    MemoryBank imported = import_bundle(bundle_doc, agent, drop,
                                        merge_into ? &*merge_into : nullptr);
    write_file(out, serialize_bank(imported));
    std::cout << "imported bundle into agent '" << agent << "' at " << out << "\n";
    return 0;
}

int cmd_inspect(const Options& opts) {
    MemoryBank bank = deserialize_bank(read_file(require_flag(opts, "bank")));
    std::cout << "agent: " << bank.agent_id << "\nschema_version: " << bank.schema_version << "\n";
    std::cout << "facts: " << bank.facts.size() << ", constraints: " << bank.constraints.size()
              << ", skills: " << bank.skills.size() << ", cases: " << bank.cases.size() << "\n";
    for (const auto& f : bank.facts) {
        std::cout << "  [fact " << f.id.substr(0, 8) << "] " << f.text << " (tags: "
                  << join(f.tags, ", ") << ")\n";
    }
    for (const auto& r : bank.constraints) {
        std::cout << "  [rule " << r.id.substr(0, 8) << "] " << r.text;
        if (r.trigger_failure) std::cout << " (trigger: " << r.trigger_failure->slug() << ")";
        std::cout << "\n";
    }
    for (const auto& s : bank.skills) {
        std::cout << "  [skill " << s.id.substr(0, 8) << "] " << s.name << " (validated "
                  << s.validation_count << "x): " << join(s.steps, "; ") << "\n";
    }
    for (const auto& c : bank.cases) {
        std::cout << "  [case] " << c.summary << "\n";
    }
    return 0;
}

int cmd_report(const Options& opts) {
    EvalReport report = report_from_json(read_file(require_flag(opts, "in")));
    std::string text = render_report_text(report);
    if (opts.has("out")) {
        write_file(opts.get("out"), text);
    } else {
        std::cout << text;
    }
    return 0;
}

} // namespace

std::string usage() {
    return "usage: cbl <command> [flags]\n"
           "\n"
           "commands:\n"
           "  init      --agent ID --out BANK\n"
           "  run       --suite FILE --strategy SLUG --backend replay=PATH|provider=CFG --out DIR\n"
           "            [--bank BANK] [--agent ID] [--budget N]\n"
           "  eval-all  --suite FILE --backend replay=DIR|provider=CFG --out DIR\n"
           "            [--bank BANK] [--agent ID] [--budget N]\n"
           "  ablate    --suite FILE --bundle BUNDLE --fixtures DIR --out DIR\n"
           "            [--diagnostics a,b] [--budget N]\n"
           "  export    --bank BANK --out BUNDLE [--exported-at MS]\n"
           "  import    BUNDLE --agent ID --out BANK [--drop KIND]... [--merge-into BANK]\n"
           "  inspect   --bank BANK\n"
           "  report    --in REPORT.json [--out FILE]\n"
           "\n"
           "strategies: cbl, zero-shot, few-shot, checklist, rule-memory\n"
           "module kinds for --drop: fact, constraint, skill, curriculum\n";
}

int dispatch(const std::vector<std::string>& args) {
    if (args.empty()) {
        std::cerr << usage();
        return 1;
    }
    const std::string& command = args.front();
    if (command == "help" || command == "--help" || command == "-h") {
        std::cout << usage();
        return 0;
    }
    try {
        Options opts = parse_options(args, 1);
        if (command == "init") return cmd_init(opts);
        if (command == "run") return cmd_run(opts);
        if (command == "eval-all") return cmd_eval_all(opts);
        if (command == "ablate") return cmd_ablate(opts);
        if (command == "export") return cmd_export(opts);
        if (command == "import") return cmd_import(opts);
        if (command == "inspect") return cmd_inspect(opts);
        if (command == "report") return cmd_report(opts);
        std::cerr << "unknown command: " << command << "\n" << usage();
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace cbl::cli
