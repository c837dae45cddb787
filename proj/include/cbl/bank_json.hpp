#pragma once
#include "cbl/memory_bank.hpp"

#include "json.hpp"

namespace cbl {

// JSON form of a bank with canonical key and list order. serialize_bank is
// bank_to_json(...).dump(2) + "\n".
nlohmann::ordered_json bank_to_json(const MemoryBank& bank);
MemoryBank bank_from_json(const nlohmann::ordered_json& doc);

} // namespace cbl
