#pragma once

#include <filesystem>
#include <string_view>
#include <variant>

#include "mpseg/volume.hpp"

namespace mpseg {

// On-disk element types. Intensities are always float32 in memory.
enum class DType { u8, i16, f32 };

std::string_view to_string(DType dtype);
DType parse_dtype(std::string_view text);
std::size_t element_size(DType dtype);

using AnyVolume = std::variant<Volume, LabelVolume, ProbabilityVolume>;

// Header/raw pair: a JSON header (dims, spacing_mm, origin_mm, dtype,
// data_file, optional num_classes) next to a little-endian raw file stored
// first-index-fastest. The raw file sits beside the header with a `.raw`
// extension.
AnyVolume read_volume(const std::filesystem::path& header_path);

// Typed readers; throw DataError when the header declares a different kind.
Volume read_intensity(const std::filesystem::path& header_path);
LabelVolume read_labels(const std::filesystem::path& header_path);
ProbabilityVolume read_probabilities(const std::filesystem::path& header_path);

void write_volume(const Volume& volume, const std::filesystem::path& header_path);
void write_volume(const LabelVolume& labels, const std::filesystem::path& header_path);
void write_volume(const ProbabilityVolume& probs, const std::filesystem::path& header_path);
void write_volume(const AnyVolume& volume, const std::filesystem::path& header_path);

std::filesystem::path raw_path_for(const std::filesystem::path& header_path);

// Little-endian float32 blobs, shared with the segmenter protocol.
std::vector<float> read_f32_file(const std::filesystem::path& path, std::size_t expected_count);
void write_f32_file(const std::filesystem::path& path, std::span<const float> values);
std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

}  // namespace mpseg
