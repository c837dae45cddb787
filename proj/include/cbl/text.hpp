#pragma once
#include <cstdint>
#include <string>
#include <vector>

namespace cbl {

// Lowercase ASCII, collapse whitespace runs into single spaces, trim both ends.
// This is the form checkpoint and signal patterns match against.
std::string fold_text(const std::string& s);

// fold_text plus stripping trailing punctuation (. , ; : ! ?).
// Entry identity is computed over this form, so texts that differ only in
// case, spacing, or a trailing period share one id.
std::string normalize_text(const std::string& s);

// FNV-1a, 64-bit. Stable across processes and platforms.
uint64_t fnv1a64(const std::string& s);
uint64_t fnv1a64(const void* data, size_t len);

std::string to_hex64(uint64_t v);

// 16-hex-digit id of the normalized text.
std::string content_id(const std::string& text);

// Lowercase + trim each tag, drop empties, sort, unique.
std::vector<std::string> normalize_tags(const std::vector<std::string>& tags);

// True if fold_text(needle) occurs as a substring of an already-folded haystack.
bool contains_folded(const std::string& folded_haystack, const std::string& needle);

std::string join(const std::vector<std::string>& parts, const std::string& sep);

// Whole-file helpers used by fixtures, bundles, and reports.
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

} // namespace cbl
