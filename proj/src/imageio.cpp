#include "ocon/imageio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>
#include <unordered_set>

#include "ocon/error.hpp"
#include "ocon/random.hpp"
#include "text_util.hpp"

namespace ocon {

const char* to_string(Role role) noexcept { return role == Role::Train ? "train" : "test"; }

namespace {

bool is_space(std::uint8_t c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  // Skips whitespace and comments, then reads an unsigned decimal.
  std::size_t number(const char* what) {
    skip_space_and_comments();
    if (pos_ >= bytes_.size()) {
      throw Error(ErrorCode::TruncatedImage, std::string("header ends before ") + what);
    }
    if (bytes_[pos_] < '0' || bytes_[pos_] > '9') {
      throw Error(ErrorCode::UnsupportedFormat, std::string("expected ") + what);
    }
    std::size_t value = 0;
    while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > (1u << 30)) throw Error(ErrorCode::UnsupportedFormat, std::string(what) + " too large");
      ++pos_;
    }
    return value;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (is_space(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

GrayImage parse_pgm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '2')) {
    throw Error(ErrorCode::UnsupportedFormat, "missing P5/P2 magic");
  }
  const bool binary = bytes[1] == '5';
  if (bytes.size() > 2 && !is_space(bytes[2]) && bytes[2] != '#') {
    throw Error(ErrorCode::UnsupportedFormat, "malformed magic");
  }
  HeaderReader header(bytes);
  header.advance(2);
  GrayImage image;
  image.width = header.number("width");
  image.height = header.number("height");
  const std::size_t maxval = header.number("maxval");
  if (image.width == 0 || image.height == 0) {
    throw Error(ErrorCode::UnsupportedFormat, "zero image dimension");
  }
  if (maxval == 0) throw Error(ErrorCode::UnsupportedFormat, "maxval must be positive");
  if (maxval > 255) throw Error(ErrorCode::UnsupportedDepth, "maxval " + std::to_string(maxval) + " > 255");

  const std::size_t count = image.width * image.height;
  image.pixels.reserve(count);
  if (binary) {
    std::size_t start = header.pos();
    if (start >= bytes.size() || !is_space(bytes[start])) {
      throw Error(ErrorCode::TruncatedImage, "no payload after header");
    }
    ++start;
    if (bytes.size() - start < count) {
      throw Error(ErrorCode::TruncatedImage, "payload has " + std::to_string(bytes.size() - start) +
                                                 " bytes, expected " + std::to_string(count));
    }
    image.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(start),
                        bytes.begin() + static_cast<std::ptrdiff_t>(start + count));
    for (auto p : image.pixels) {
      if (p > maxval) throw Error(ErrorCode::UnsupportedFormat, "pixel exceeds maxval");
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t v = header.number("pixel");
      if (v > maxval) throw Error(ErrorCode::UnsupportedFormat, "pixel exceeds maxval");
      image.pixels.push_back(static_cast<std::uint8_t>(v));
    }
  }
  return image;
}

GrayImage parse_pgm(std::string_view bytes) {
  return parse_pgm(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
}

GrayImage read_pgm(const std::filesystem::path& path) {
  const std::string contents = detail::read_file(path);
  return parse_pgm(std::string_view(contents));
}

std::vector<std::uint8_t> serialize_pgm(const GrayImage& image) {
  const std::string header =
      "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.pixels.begin(), image.pixels.end());
  return out;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  const auto bytes = serialize_pgm(image);
  detail::write_file(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::vector<double> to_vector(const GrayImage& image) {
  std::vector<double> v(image.pixels.size());
  std::transform(image.pixels.begin(), image.pixels.end(), v.begin(),
                 [](std::uint8_t p) { return p / 255.0; });
  return v;
}

GrayImage downsample(const GrayImage& image, std::size_t factor) {
  if (factor == 0) throw Error(ErrorCode::InvalidConfig, "downsample factor must be >= 1");
  if (factor == 1) return image;
  GrayImage out;
  out.width = image.width / factor;
  out.height = image.height / factor;
  if (out.width == 0 || out.height == 0) {
    throw Error(ErrorCode::InvalidConfig, "downsample factor larger than image");
  }
  out.pixels.resize(out.width * out.height);
  const std::size_t area = factor * factor;
  for (std::size_t y = 0; y < out.height; ++y) {
    for (std::size_t x = 0; x < out.width; ++x) {
      std::size_t sum = 0;
      for (std::size_t dy = 0; dy < factor; ++dy) {
        for (std::size_t dx = 0; dx < factor; ++dx) {
          sum += image.pixels[(y * factor + dy) * image.width + x * factor + dx];
        }
      }
      out.pixels[y * out.width + x] = static_cast<std::uint8_t>((sum + area / 2) / area);
    }
  }
  return out;
}

Manifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir) {
  Manifest manifest;
  manifest.base_dir = base_dir;
  std::unordered_set<std::string> seen;
  std::set<int> train_classes;
  std::vector<std::pair<int, std::int64_t>> test_lines;  // (class, line)

  std::int64_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') {
      if (eol == text.size()) break;
      continue;
    }

    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
      if (tab == std::string_view::npos) break;
      start = tab + 1;
    }
    auto syntax = [&](const std::string& why) {
      return Error(ErrorCode::ManifestSyntax, "line " + std::to_string(line_no) + ": " + why, line_no);
    };
    if (fields.size() != 3) throw syntax("expected <path>\\t<class_id>\\t<role>");
    if (fields[0].empty()) throw syntax("empty path");

    ManifestRecord record;
    record.path = std::string(fields[0]);
    try {
      record.class_id = detail::parse_int<int>(fields[1]);
    } catch (const Error&) {
      throw syntax("bad class id '" + std::string(fields[1]) + "'");
    }
    if (record.class_id < 1) throw syntax("class id must be >= 1");
    if (fields[2] == "train") {
      record.role = Role::Train;
      train_classes.insert(record.class_id);
    } else if (fields[2] == "test") {
      record.role = Role::Test;
      test_lines.emplace_back(record.class_id, line_no);
    } else {
      throw syntax("bad role '" + std::string(fields[2]) + "'");
    }
    if (!seen.insert(record.path).second) throw syntax("duplicate path " + record.path);
    manifest.records.push_back(std::move(record));
    if (eol == text.size()) break;
  }

  for (const auto& [cls, line] : test_lines) {
    if (!train_classes.contains(cls)) {
      throw Error(ErrorCode::ManifestSyntax,
                  "line " + std::to_string(line) + ": test class " + std::to_string(cls) + " has no training records",
                  line);
    }
  }
  return manifest;
}

Dataset load_manifest(const std::filesystem::path& path, std::size_t downsample_factor) {
  Dataset dataset;
  dataset.manifest = parse_manifest(detail::read_file(path), path.parent_path());
  dataset.samples.reserve(dataset.manifest.records.size());
  for (const auto& record : dataset.manifest.records) {
    const auto image_path = dataset.manifest.base_dir / record.path;
    if (!std::filesystem::exists(image_path)) {
      throw Error(ErrorCode::FileError, "missing image " + image_path.string());
    }
    GrayImage image = read_pgm(image_path);
    if (downsample_factor > 1) image = downsample(image, downsample_factor);
    dataset.samples.push_back(Sample{std::move(image), record.class_id, record.role});
  }
  return dataset;
}

std::string format_manifest(const Manifest& manifest) {
  std::string out = "# path\tclass_id\trole\n";
  for (const auto& r : manifest.records) {
    out += r.path + "\t" + std::to_string(r.class_id) + "\t" + to_string(r.role) + "\n";
  }
  return out;
}

std::vector<Sample> generate_synthetic(const SynthParams& p) {
  if (p.classes < 2) throw Error(ErrorCode::InvalidConfig, "need at least 2 classes");
  if (p.train_per_class < 1 || p.test_per_class < 1) {
    throw Error(ErrorCode::InvalidConfig, "need at least 1 train and 1 test sample per class");
  }
  if (p.side < 4) throw Error(ErrorCode::InvalidConfig, "image side must be >= 4");

  Rng rng(p.seed);
  const std::size_t n = p.side * p.side;
  std::vector<std::vector<double>> prototypes(static_cast<std::size_t>(p.classes));
  for (auto& proto : prototypes) {
    proto.resize(n);
    for (auto& v : proto) v = rng.uniform(0.0, 255.0);
  }

  const double span = static_cast<double>(p.side - 1);
  auto make = [&](const std::vector<double>& proto, int class_id, Role role) {
    const double amplitude = rng.uniform(0.0, kSynthMaxGradient);
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double gx = std::cos(angle), gy = std::sin(angle);
    Sample s;
    s.class_id = class_id;
    s.role = role;
    s.image.width = p.side;
    s.image.height = p.side;
    s.image.pixels.resize(n);
    for (std::size_t y = 0; y < p.side; ++y) {
      for (std::size_t x = 0; x < p.side; ++x) {
        // |ramp| <= amplitude * (|gx| + |gy|) / 2 <= amplitude
        const double ramp = amplitude * ((x / span - 0.5) * gx + (y / span - 0.5) * gy);
        const double v = proto[y * p.side + x] + kSynthNoiseSigma * rng.normal() + ramp;
        s.image.pixels[y * p.side + x] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
    return s;
  };

  std::vector<Sample> samples;
  samples.reserve(static_cast<std::size_t>(p.classes * (p.train_per_class + p.test_per_class)));
  for (int c = 0; c < p.classes; ++c) {
    for (int i = 0; i < p.train_per_class; ++i) samples.push_back(make(prototypes[c], c + 1, Role::Train));
    for (int i = 0; i < p.test_per_class; ++i) samples.push_back(make(prototypes[c], c + 1, Role::Test));
  }
  return samples;
}

std::filesystem::path write_dataset(const std::filesystem::path& dir, std::span<const Sample> samples) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::FileError, "cannot create " + dir.string() + ": " + ec.message());

  Manifest manifest;
  manifest.base_dir = dir;
  std::vector<std::pair<int, int>> counters;  // (train, test) per class id
  for (const auto& s : samples) {
    if (static_cast<std::size_t>(s.class_id) >= counters.size()) counters.resize(s.class_id + 1);
    int& index = s.role == Role::Train ? counters[s.class_id].first : counters[s.class_id].second;
    char name[64];
    std::snprintf(name, sizeof name, "c%02d_%s_%03d.pgm", s.class_id, to_string(s.role), index++);
    write_pgm(dir / name, s.image);
    manifest.records.push_back({name, s.class_id, s.role});
  }
  const auto manifest_path = dir / "manifest.tsv";
  detail::write_file(manifest_path, format_manifest(manifest));
  return manifest_path;
}

}  // namespace ocon
