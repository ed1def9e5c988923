#include "mpseg/volume_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "json.hpp"
#include "mpseg/error.hpp"

namespace mpseg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::string_view kFormatTag = "mpseg-volume";

template <typename T>
T from_little_endian(const std::uint8_t* bytes) {
  T value;
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(&value, bytes, sizeof(T));
  } else {
    std::uint8_t reversed[sizeof(T)];
    for (std::size_t b = 0; b < sizeof(T); ++b) reversed[b] = bytes[sizeof(T) - 1 - b];
    std::memcpy(&value, reversed, sizeof(T));
  }
  return value;
}

template <typename T>
void append_little_endian(std::vector<std::uint8_t>& out, T value) {
  std::uint8_t bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native != std::endian::little) {
    for (std::size_t b = 0; b < sizeof(T) / 2; ++b) std::swap(bytes[b], bytes[sizeof(T) - 1 - b]);
  }
  out.insert(out.end(), bytes, bytes + sizeof(T));
}

enum class Kind { intensity, labels, probabilities };

std::string_view kind_name(Kind kind) {
  switch (kind) {
    case Kind::intensity: return "intensity";
    case Kind::labels: return "labels";
    case Kind::probabilities: return "probabilities";
  }
  return "intensity";
}

struct Header {
  Kind kind = Kind::intensity;
  VolumeGeometry geometry;
  DType dtype = DType::f32;
  fs::path data_file;
  int num_classes = 0;
  bool normalized = false;
};

template <typename T>
std::array<T, 3> triple(const json& node, const char* key) {
  if (!node.contains(key)) throw DataError(std::string("volume header is missing '") + key + "'");
  const json& value = node.at(key);
  if (!value.is_array() || value.size() != 3) {
    throw DataError(std::string("volume header key '") + key + "' must be a 3-element array");
  }
  return {value[0].get<T>(), value[1].get<T>(), value[2].get<T>()};
}

Header parse_header(const fs::path& header_path) {
  Header header;
  json node;
  try {
    node = json::parse(read_text(header_path));
  } catch (const json::exception& e) {
    throw DataError("malformed volume header " + header_path.string() + ": " + e.what());
  }
  try {
    if (!node.is_object()) throw DataError("volume header must be a JSON object");
    header.geometry.dims = triple<std::int64_t>(node, "dims");
    header.geometry.spacing_mm = triple<double>(node, "spacing_mm");
    header.geometry.origin_mm =
        node.contains("origin_mm") ? triple<double>(node, "origin_mm") : Vec3{0.0, 0.0, 0.0};
    header.geometry.validate();
    if (!node.contains("dtype")) throw DataError("volume header is missing 'dtype'");
    header.dtype = parse_dtype(node.at("dtype").get<std::string>());
    header.data_file = node.contains("data_file")
                           ? fs::path(node.at("data_file").get<std::string>())
                           : raw_path_for(header_path).filename();
    if (node.contains("num_classes")) header.num_classes = node.at("num_classes").get<int>();
    header.normalized = node.value("normalized", false);

    if (node.contains("kind")) {
      const auto kind = node.at("kind").get<std::string>();
      if (kind == "intensity") {
        header.kind = Kind::intensity;
      } else if (kind == "labels") {
        header.kind = Kind::labels;
      } else if (kind == "probabilities") {
        header.kind = Kind::probabilities;
      } else {
        throw DataError("unknown volume kind '" + kind + "'");
      }
    } else if (header.num_classes > 0) {
      header.kind = header.dtype == DType::f32 ? Kind::probabilities : Kind::labels;
    }
    if (header.kind != Kind::intensity && header.num_classes < 1) {
      throw DataError("label/probability header requires num_classes >= 1");
    }
    if (header.kind == Kind::labels && header.dtype == DType::f32) {
      throw DataError("label volumes must use an integer dtype");
    }
    if (header.kind == Kind::probabilities && header.dtype != DType::f32) {
      throw DataError("probability volumes must use dtype f32");
    }
  } catch (const json::exception& e) {
    throw DataError("malformed volume header " + header_path.string() + ": " + e.what());
  }
  return header;
}

void write_header(const fs::path& header_path, Kind kind, const VolumeGeometry& geometry,
                  DType dtype, int num_classes, bool normalized) {
  json node = json::object();
  node["format"] = kFormatTag;
  node["kind"] = kind_name(kind);
  node["dims"] = geometry.dims;
  node["spacing_mm"] = geometry.spacing_mm;
  node["origin_mm"] = geometry.origin_mm;
  node["dtype"] = to_string(dtype);
  node["data_file"] = raw_path_for(header_path).filename().string();
  if (kind != Kind::intensity) node["num_classes"] = num_classes;
  if (kind == Kind::probabilities) node["normalized"] = normalized;
  write_text(header_path, node.dump(2) + "\n");
}

std::vector<std::uint8_t> read_payload(const fs::path& header_path, const Header& header,
                                       std::size_t channels) {
  const fs::path raw = header.data_file.is_absolute()
                           ? header.data_file
                           : header_path.parent_path() / header.data_file;
  if (!fs::exists(raw)) throw DataError("raw data file not found: " + raw.string());
  auto bytes = read_bytes(raw);
  const std::size_t expected = header.geometry.size() * channels * element_size(header.dtype);
  if (bytes.size() != expected) {
    throw DataError("raw file " + raw.string() + " has " + std::to_string(bytes.size()) +
                    " bytes, header declares " + std::to_string(expected));
  }
  return bytes;
}

std::vector<float> decode_real(const std::vector<std::uint8_t>& bytes, DType dtype) {
  const std::size_t n = bytes.size() / element_size(dtype);
  std::vector<float> values(n);
  for (std::size_t v = 0; v < n; ++v) {
    switch (dtype) {
      case DType::u8: values[v] = static_cast<float>(bytes[v]); break;
      case DType::i16:
        values[v] = static_cast<float>(from_little_endian<std::int16_t>(&bytes[2 * v]));
        break;
      case DType::f32: values[v] = from_little_endian<float>(&bytes[4 * v]); break;
    }
  }
  return values;
}

}  // namespace

std::string_view to_string(DType dtype) {
  switch (dtype) {
    case DType::u8: return "u8";
    case DType::i16: return "i16";
    case DType::f32: return "f32";
  }
  return "f32";
}

DType parse_dtype(std::string_view text) {
  if (text == "u8") return DType::u8;
  if (text == "i16") return DType::i16;
  if (text == "f32") return DType::f32;
  throw DataError("unsupported dtype '" + std::string(text) + "' (expected u8, i16 or f32)");
}

std::size_t element_size(DType dtype) {
  switch (dtype) {
    case DType::u8: return 1;
    case DType::i16: return 2;
    case DType::f32: return 4;
  }
  return 4;
}

fs::path raw_path_for(const fs::path& header_path) {
  fs::path raw = header_path;
  raw.replace_extension(".raw");
  if (raw == header_path) raw += ".raw";
  return raw;
}

AnyVolume read_volume(const fs::path& header_path) {
  if (!fs::exists(header_path)) throw DataError("volume header not found: " + header_path.string());
  const Header header = parse_header(header_path);
  switch (header.kind) {
    case Kind::intensity: {
      auto bytes = read_payload(header_path, header, 1);
      return Volume(header.geometry, decode_real(bytes, header.dtype));
    }
    case Kind::labels: {
      auto bytes = read_payload(header_path, header, 1);
      std::vector<Label> labels(header.geometry.size());
      for (std::size_t v = 0; v < labels.size(); ++v) {
        const int value = header.dtype == DType::u8
                              ? bytes[v]
                              : from_little_endian<std::int16_t>(&bytes[2 * v]);
        if (value < 0 || value >= header.num_classes) {
          throw DataError("label value " + std::to_string(value) + " at voxel " +
                          std::to_string(v) + " is outside [0, " +
                          std::to_string(header.num_classes) + ")");
        }
        labels[v] = static_cast<Label>(value);
      }
      return LabelVolume(header.geometry, std::move(labels), header.num_classes);
    }
    case Kind::probabilities: {
      auto bytes = read_payload(header_path, header, static_cast<std::size_t>(header.num_classes));
      return ProbabilityVolume(header.geometry, header.num_classes,
                               decode_real(bytes, DType::f32), header.normalized);
    }
  }
  throw DataError("unreachable volume kind");
}

Volume read_intensity(const fs::path& header_path) {
  auto any = read_volume(header_path);
  if (auto* v = std::get_if<Volume>(&any)) return std::move(*v);
  throw DataError(header_path.string() + " is not an intensity volume");
}

LabelVolume read_labels(const fs::path& header_path) {
  auto any = read_volume(header_path);
  if (auto* v = std::get_if<LabelVolume>(&any)) return std::move(*v);
  throw DataError(header_path.string() + " is not a label volume");
}

ProbabilityVolume read_probabilities(const fs::path& header_path) {
  auto any = read_volume(header_path);
  if (auto* v = std::get_if<ProbabilityVolume>(&any)) return std::move(*v);
  throw DataError(header_path.string() + " is not a probability volume");
}

void write_volume(const Volume& volume, const fs::path& header_path) {
  write_f32_file(raw_path_for(header_path), volume.data());
  write_header(header_path, Kind::intensity, volume.geometry(), DType::f32, 0, false);
}

void write_volume(const LabelVolume& labels, const fs::path& header_path) {
  write_bytes(raw_path_for(header_path), labels.labels());
  write_header(header_path, Kind::labels, labels.geometry(), DType::u8, labels.num_classes(),
               false);
}

void write_volume(const ProbabilityVolume& probs, const fs::path& header_path) {
  write_f32_file(raw_path_for(header_path), probs.data());
  write_header(header_path, Kind::probabilities, probs.geometry(), DType::f32,
               probs.num_classes(), probs.normalized());
}

void write_volume(const AnyVolume& volume, const fs::path& header_path) {
  std::visit([&](const auto& v) { write_volume(v, header_path); }, volume);
}

std::vector<float> read_f32_file(const fs::path& path, std::size_t expected_count) {
  const auto bytes = read_bytes(path);
  if (bytes.size() != expected_count * 4) {
    throw DataError(path.string() + " has " + std::to_string(bytes.size()) + " bytes, expected " +
                    std::to_string(expected_count * 4));
  }
  return decode_real(bytes, DType::f32);
}

void write_f32_file(const fs::path& path, std::span<const float> values) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(values.size() * 4);
  for (const float v : values) append_little_endian(bytes, v);
  write_bytes(path, bytes);
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_bytes(const fs::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

void write_text(const fs::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace mpseg
