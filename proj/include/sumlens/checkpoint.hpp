#pragma once

#include <filesystem>
#include <string>

#include "sumlens/toy_transformer.hpp"

namespace sumlens {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Binary layout: "SLCK", u32 version, u64 header length, JSON header
// {config, lm_only, seed, vocab_hash, vocab, num_parameters}, then the raw
// little-endian doubles of the parameter buffer.
std::string serialize_checkpoint(const ToyTransformerBackend& backend);
ToyTransformerBackend parse_checkpoint(const std::string& bytes);

void save_checkpoint(const ToyTransformerBackend& backend, const std::filesystem::path& path);
ToyTransformerBackend load_checkpoint(const std::filesystem::path& path);

}  // namespace sumlens
