#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "rotrec/forward.hpp"
#include "rotrec/phantom.hpp"
#include "rotrec/recovery.hpp"
#include "rotrec/so3.hpp"
#include "rotrec/voxel.hpp"

namespace rotrec::io {

using json = nlohmann::json;

// FNV-1a over the raw bytes, hex encoded.
std::string fnv1a_hex(const void* data, std::size_t len);
std::string hash_file(const std::filesystem::path& p);
std::string hash_string(const std::string& s);

// Writes to "<path>.partial" and renames on success.
void atomic_write(const std::filesystem::path& path, const std::string& bytes);

std::string read_file(const std::filesystem::path& path);

// ---- phantom: structured text (json) ----
json phantom_to_json(const phantom::Phantom& ph);
phantom::Phantom phantom_from_json(const json& j);
void save_phantom(const phantom::Phantom& ph, const std::filesystem::path& path);
phantom::Phantom load_phantom(const std::filesystem::path& path);

// ---- trajectory ----
json trajectory_to_json(const so3::MotionTrajectory& t);
so3::MotionTrajectory trajectory_from_json(const json& j);

// ---- voxel grid: raw little-endian f64 payload + json sidecar header ----
void save_voxels(const voxel::VoxelGrid& g, const std::filesystem::path& payload_path);
voxel::VoxelGrid load_voxels(const std::filesystem::path& payload_path);

// ---- measurement set: binary payload + json header sidecar ----
void save_measurements(const forward::MeasurementSet& ms,
                       const std::filesystem::path& payload_path,
                       const std::string& phantom_path = {},
                       const std::string& trajectory_path = {});
forward::MeasurementSet load_measurements(const std::filesystem::path& payload_path);
json load_measurement_header(const std::filesystem::path& payload_path);

// ---- recovery result ----
json result_to_json(const recover::RecoveryResult& r);
void save_result(const recover::RecoveryResult& r, const std::filesystem::path& path);
std::string result_csv(const recover::RecoveryResult& r);

}  // namespace rotrec::io
