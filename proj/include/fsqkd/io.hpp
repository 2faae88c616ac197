#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fsqkd/bitvec.hpp"
#include "fsqkd/channel.hpp"
#include "fsqkd/protocol.hpp"
#include "fsqkd/security.hpp"
#include "fsqkd/sync.hpp"

namespace fsqkd {

// Time-tag stream: repeated little-endian 9-byte records, 8-byte unsigned
// picosecond timestamp + 1-byte channel (0..3 detectors, 255 PPS).
void write_tags(const std::filesystem::path& path, std::span<const TimeTag> tags,
                bool append = false);
std::vector<TimeTag> read_tags(const std::filesystem::path& path);

// Pulse-train file: either the explicit per-slot codes or just the
// procedural tape header (params + seed), which regenerates any slot.
struct PulseFile {
    ProtocolParams params;
    std::uint64_t n_slots = 0;
    bool procedural = false;
    std::uint64_t tape_seed = 0;   // procedural mode
    PulseTrain train;              // explicit mode

    PulseRecord at(std::uint64_t slot) const;
};

void write_pulse_train(const std::filesystem::path& path, const PulseTrain& train,
                       const ProtocolParams& params);
void write_pulse_tape(const std::filesystem::path& path, const SlotTape& tape,
                      std::uint64_t n_slots);
PulseFile read_pulse_file(const std::filesystem::path& path);

// Packed key: 8-byte little-endian bit count, then the bits LSB-first.
void write_key(const std::filesystem::path& path, const BitVec& key);
BitVec read_key(const std::filesystem::path& path);

nlohmann::json to_json(const DecoyCounts& c);
DecoyCounts decoy_counts_from_json(const nlohmann::json& j);
nlohmann::json to_json(const KeyBudget& b);
KeyBudget key_budget_from_json(const nlohmann::json& j);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

} // namespace fsqkd
