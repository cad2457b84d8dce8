#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "arm/net/graph.hpp"

namespace arm::net {

inline constexpr const char* kGraphFormat = "arm-net/1";
inline constexpr std::uint8_t kWeightsVersion = 1;

// Weights blob: "ARMW", version byte, little-endian float32 payload.
std::vector<std::uint8_t> encode_weights(const std::vector<float>& payload);
std::vector<float> decode_weights(const std::vector<std::uint8_t>& blob);

std::string graph_to_text(const NetGraph& g);
NetGraph graph_from_text(const std::string& text, const std::vector<std::uint8_t>& blob);

void save_graph(const NetGraph& g, const std::filesystem::path& graph_file, const std::filesystem::path& weights_file);
NetGraph load_graph(const std::filesystem::path& graph_file, const std::filesystem::path& weights_file);

// Sibling weights path: model.json -> model.armw.
std::filesystem::path weights_path_for(const std::filesystem::path& graph_file);
NetGraph load_graph(const std::filesystem::path& graph_file);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

} // namespace arm::net
