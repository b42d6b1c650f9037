#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ocon {

// 8-bit grayscale raster, row-major.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;

  bool operator==(const GrayImage&) const = default;
};

enum class Role { Train, Test };

const char* to_string(Role role) noexcept;

struct Sample {
  GrayImage image;
  int class_id = 0;
  Role role = Role::Train;

  bool operator==(const Sample&) const = default;
};

struct ManifestRecord {
  std::string path;  // relative to Manifest::base_dir
  int class_id = 0;
  Role role = Role::Train;
};

struct Manifest {
  std::filesystem::path base_dir;
  std::vector<ManifestRecord> records;
};

struct Dataset {
  Manifest manifest;
  std::vector<Sample> samples;  // same order as manifest.records
};

// Accepts P5 (binary) and P2 (ASCII) with maxval <= 255. Header comments are
// allowed; the P5 payload starts after the single whitespace byte that
// follows maxval.
GrayImage parse_pgm(std::span<const std::uint8_t> bytes);
GrayImage parse_pgm(std::string_view bytes);
GrayImage read_pgm(const std::filesystem::path& path);

// Always emits P5 with maxval 255.
std::vector<std::uint8_t> serialize_pgm(const GrayImage& image);
void write_pgm(const std::filesystem::path& path, const GrayImage& image);

// Row-major flattening, pixel / 255.
std::vector<double> to_vector(const GrayImage& image);

// Block-average by an integer factor; trailing rows/columns that do not fill a
// whole block are dropped. factor 1 returns the input unchanged.
GrayImage downsample(const GrayImage& image, std::size_t factor);

// Parses manifest text without touching the filesystem.
Manifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir);

// Reads the manifest at `path` and every image it references. Paths inside
// the manifest are resolved relative to the manifest's directory.
Dataset load_manifest(const std::filesystem::path& path, std::size_t downsample_factor = 1);

std::string format_manifest(const Manifest& manifest);

struct SynthParams {
  int classes = 10;
  int train_per_class = 20;
  int test_per_class = 20;
  std::size_t side = 16;
  std::uint64_t seed = 1;
};

inline constexpr double kSynthNoiseSigma = 12.0;
inline constexpr double kSynthMaxGradient = 40.0;

// Per class a random prototype; each sample adds Gaussian pixel noise and a
// random linear illumination ramp, then clamps to [0,255]. Output is ordered
// by class, train samples before test samples.
std::vector<Sample> generate_synthetic(const SynthParams& params);

// Writes one PGM per sample plus `manifest.tsv` into `dir`. Returns the
// manifest path.
std::filesystem::path write_dataset(const std::filesystem::path& dir,
                                    std::span<const Sample> samples);

}  // namespace ocon
