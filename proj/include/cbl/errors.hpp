#pragma once
#include <stdexcept>
#include <string>

namespace cbl {

// Base class for every error the engine raises.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Caller handed an entry that violates its own invariants (empty text, no steps).
struct MalformedEntry : Error { using Error::Error; };

// apply_phi called twice with the same case id.
struct DuplicateCase : Error { using Error::Error; };

// Bundle or bank document carries a schema_version this build does not read.
struct UnsupportedVersion : Error { using Error::Error; };

// Document failed to parse or an invariant check failed on load.
struct CorruptBundle : Error { using Error::Error; };

// Bundle body does not match the content hash recorded in its manifest.
struct HashMismatch : Error { using Error::Error; };

// Context budget smaller than the task text itself.
struct BudgetTooSmall : Error { using Error::Error; };

// Replay backend has no record for the requested sample id.
struct FixtureMissing : Error { using Error::Error; };

// Provider endpoint unreachable or rejected the request.
struct BackendUnavailable : Error { using Error::Error; };

// compare() needs at least one baseline per task.
struct MissingBaseline : Error { using Error::Error; };

// Trace document violates trace invariants (seq order, timing).
struct InvalidTrace : Error { using Error::Error; };

// Suite or backend configuration unusable.
struct ConfigError : Error { using Error::Error; };

} // namespace cbl
