#include "cbl/transfer.hpp"

#include "cbl/bank_json.hpp"
#include "cbl/errors.hpp"
#include "cbl/text.hpp"

#include <utility>

namespace cbl {

using ordered_json = nlohmann::ordered_json;

std::pair<BundleManifest, std::string> export_bundle(const MemoryBank& bank, int64_t exported_at) {
    std::string body = serialize_bank(bank);
    BundleManifest manifest;
    manifest.schema_version = bank.schema_version;
    manifest.source_agent = bank.agent_id;
    manifest.exported_at = exported_at;
    manifest.entry_counts = {
        {module_kind_slug(ModuleKind::Fact), static_cast<int>(bank.facts.size())},
        {module_kind_slug(ModuleKind::Constraint), static_cast<int>(bank.constraints.size())},
        {module_kind_slug(ModuleKind::Skill), static_cast<int>(bank.skills.size())},
        {module_kind_slug(ModuleKind::Curriculum), static_cast<int>(bank.cases.size())},
    };
    manifest.content_hash = to_hex64(fnv1a64(body));
    return {std::move(manifest), std::move(body)};
}

namespace {

ordered_json manifest_to_json(const BundleManifest& m) {
    ordered_json j;
    j["schema_version"] = m.schema_version;
    j["source_agent"] = m.source_agent;
    j["exported_at"] = m.exported_at;
    ordered_json counts;
    counts["fact"] = m.entry_counts.count("fact") ? m.entry_counts.at("fact") : 0;
    counts["constraint"] = m.entry_counts.count("constraint") ? m.entry_counts.at("constraint") : 0;
    counts["skill"] = m.entry_counts.count("skill") ? m.entry_counts.at("skill") : 0;
    counts["curriculum"] = m.entry_counts.count("curriculum") ? m.entry_counts.at("curriculum") : 0;
    j["entry_counts"] = counts;
    j["content_hash"] = m.content_hash;
    return j;
}

BundleManifest manifest_from_json(const ordered_json& j) {
    BundleManifest m;
    try {
        m.schema_version = j.at("schema_version").get<int>();
        m.source_agent = j.at("source_agent").get<std::string>();
        m.exported_at = j.at("exported_at").get<int64_t>();
        for (const auto& [kind, count] : j.at("entry_counts").items()) {
            m.entry_counts[kind] = count.get<int>();
        }
        m.content_hash = j.at("content_hash").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw CorruptBundle(std::string("bundle manifest field error: ") + e.what());
    }
    return m;
}

ordered_json parse_bundle(const std::string& document) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(document);
    } catch (const nlohmann::json::exception& e) {
        throw CorruptBundle(std::string("bundle does not parse: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("manifest") || !doc.contains("bank")) {
        throw CorruptBundle("bundle must carry 'manifest' and 'bank'");
    }
    return doc;
}

} // namespace

std::string write_bundle_document(const BundleManifest& manifest, const std::string& body) {
    ordered_json bank_doc;
    try {
        bank_doc = ordered_json::parse(body);
    } catch (const nlohmann::json::exception& e) {
        throw CorruptBundle(std::string("bundle body does not parse: ") + e.what());
    }
    ordered_json doc;
    doc["manifest"] = manifest_to_json(manifest);
    doc["bank"] = bank_doc;
    return doc.dump(2) + "\n";
}

std::string make_bundle(const MemoryBank& bank, int64_t exported_at) {
    auto [manifest, body] = export_bundle(bank, exported_at);
    return write_bundle_document(manifest, body);
}

BundleManifest read_manifest(const std::string& bundle_document) {
    return manifest_from_json(parse_bundle(bundle_document).at("manifest"));
}

MemoryBank import_bundle(const std::string& bundle_document, const std::string& target_agent,
                         const std::set<ModuleKind>& drop, const MemoryBank* merge_into) {
    ordered_json doc = parse_bundle(bundle_document);
    BundleManifest manifest = manifest_from_json(doc.at("manifest"));
    if (manifest.schema_version != 1) {
        throw UnsupportedVersion("bundle schema_version " +
                                 std::to_string(manifest.schema_version) + " is not supported");
    }

    MemoryBank loaded = bank_from_json(doc.at("bank"));

    // The hash covers the canonical serialization, so re-serializing the
    // parsed body detects any semantic edit regardless of formatting.
    std::string canonical = serialize_bank(loaded);
    std::string actual = to_hex64(fnv1a64(canonical));
    if (actual != manifest.content_hash) {
        throw HashMismatch("bundle content hash mismatch: manifest " + manifest.content_hash +
                           ", body " + actual);
    }

    auto expect_count = [&](ModuleKind kind, size_t actual_count) {
        auto it = manifest.entry_counts.find(module_kind_slug(kind));
        if (it != manifest.entry_counts.end() &&
            it->second != static_cast<int>(actual_count)) {
            throw CorruptBundle("manifest entry count disagrees with body for " +
                                module_kind_slug(kind));
        }
    };
    expect_count(ModuleKind::Fact, loaded.facts.size());
    expect_count(ModuleKind::Constraint, loaded.constraints.size());
    expect_count(ModuleKind::Skill, loaded.skills.size());
    expect_count(ModuleKind::Curriculum, loaded.cases.size());

    MemoryBank result = ablate(loaded, drop);
    result.agent_id = target_agent;
    if (!merge_into) return result;

    MemoryBank merged = *merge_into;
    merged.agent_id = target_agent;
    for (const auto& fact : result.facts) merged = add_entry(std::move(merged), fact).first;
    for (const auto& rule : result.constraints) merged = add_entry(std::move(merged), rule).first;
    for (const auto& skill : result.skills) merged = add_entry(std::move(merged), skill).first;
    for (const auto& rec : result.cases) merged = add_entry(std::move(merged), rec).first;
    return merged;
}

} // namespace cbl
