#pragma once
#include "cbl/memory_bank.hpp"

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>

namespace cbl {

// Provenance header of a shareable bundle. content_hash covers the
// canonical serialization of the bank body, so any semantic edit to the
// body is detectable on import.
struct BundleManifest {
    int schema_version = 1;
    std::string source_agent;
    int64_t exported_at = 0;
    std::map<std::string, int> entry_counts; // module kind slug -> count
    std::string content_hash;
};

// Serialize the bank and compute its manifest. The body document is
// memory_bank's canonical form.
std::pair<BundleManifest, std::string> export_bundle(const MemoryBank& bank,
                                                     int64_t exported_at = 0);

// Single combined bundle document: {"manifest": ..., "bank": ...}.
std::string write_bundle_document(const BundleManifest& manifest, const std::string& body);
std::string make_bundle(const MemoryBank& bank, int64_t exported_at = 0);

BundleManifest read_manifest(const std::string& bundle_document);

// Load a bundle into a bank for target_agent: verify the hash, drop the
// requested stores, rewrite the agent id, and (when merge_into is given)
// merge entries under add_entry dedupe semantics.
MemoryBank import_bundle(const std::string& bundle_document, const std::string& target_agent,
                         const std::set<ModuleKind>& drop = {},
                         const MemoryBank* merge_into = nullptr);

} // namespace cbl
