#include "reconv/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>

#include "reconv/error.hpp"
#include "reconv/random.hpp"

namespace reconv {
namespace {

constexpr std::size_t kPlane = kImageSide * kImageSide;

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("short write to " + path);
}

// Copies one channel-planar 3072-byte image into an H x W x C slot.
void unpack_image(const std::uint8_t* src, double* dst) {
  for (std::size_t c = 0; c < kImageChannels; ++c) {
    for (std::size_t p = 0; p < kPlane; ++p) dst[p * kImageChannels + c] = src[c * kPlane + p] / 255.0;
  }
}

std::uint8_t quantize(double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

}  // namespace

Dataset::Dataset(Tensor images, std::vector<std::uint8_t> labels, std::size_t classes)
    : images_(std::move(images)), labels_(std::move(labels)), classes_(classes) {
  if (images_.rank() != 4 || images_.dim(0) != labels_.size()) {
    throw FormatError("dataset: images " + shape_string(images_.shape()) + " do not match " +
                      std::to_string(labels_.size()) + " labels");
  }
  for (std::size_t n = 0; n < labels_.size(); ++n) {
    if (labels_[n] >= classes_) {
      throw FormatError("dataset: label " + std::to_string(labels_[n]) + " of example " + std::to_string(n) +
                        " is not below " + std::to_string(classes_));
    }
  }
  for (std::size_t i = 0; i < images_.size(); ++i) {
    if (!(images_[i] >= 0.0 && images_[i] <= 1.0)) {
      throw FormatError("dataset: pixel value " + std::to_string(images_[i]) + " at element " + std::to_string(i) +
                        " is outside [0, 1]");
    }
  }
}

Shape Dataset::image_shape() const {
  if (images_.empty()) return {};
  return {images_.dim(1), images_.dim(2), images_.dim(3)};
}

Tensor Dataset::image(std::size_t n) const {
  if (n >= size()) throw ShapeError("dataset: example " + std::to_string(n) + " out of range");
  const Shape shape = image_shape();
  const std::size_t stride = element_count(shape);
  const auto first = images_.values().begin() + static_cast<std::ptrdiff_t>(n * stride);
  return Tensor(shape, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(stride)));
}

Dataset Dataset::head(std::size_t count) const {
  if (count == 0 || count >= size()) return *this;
  Shape shape = images_.shape();
  shape[0] = count;
  const std::size_t stride = element_count(image_shape());
  const auto first = images_.values().begin();
  Tensor images(shape, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(count * stride)));
  std::vector<std::uint8_t> labels(labels_.begin(), labels_.begin() + static_cast<std::ptrdiff_t>(count));
  return Dataset(std::move(images), std::move(labels), classes_);
}

Dataset parse_cifar10(std::span<const std::uint8_t> bytes, const std::string& source) {
  if (bytes.size() % kCifarRecordBytes != 0) {
    const std::size_t offset = bytes.size() - bytes.size() % kCifarRecordBytes;
    throw FormatError(source + ": truncated record at byte offset " + std::to_string(offset) + " (length " +
                      std::to_string(bytes.size()) + " is not a multiple of " + std::to_string(kCifarRecordBytes) +
                      ")");
  }
  const std::size_t n = bytes.size() / kCifarRecordBytes;
  std::vector<std::uint8_t> pixels;
  std::vector<std::uint8_t> labels;
  pixels.reserve(n * kImageBytes);
  labels.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto record = bytes.subspan(r * kCifarRecordBytes, kCifarRecordBytes);
    if (record[0] > 9) {
      throw FormatError(source + ": record " + std::to_string(r) + " has label byte " + std::to_string(record[0]) +
                        " (expected 0..9)");
    }
    labels.push_back(record[0]);
    pixels.insert(pixels.end(), record.begin() + 1, record.end());
  }
  return decode_planar(pixels, labels, 10);
}

Dataset load_cifar10(const std::vector<std::string>& paths) {
  if (paths.empty()) throw FormatError("load_cifar10: no batch files given");
  std::vector<std::uint8_t> all;
  for (const auto& path : paths) {
    const auto bytes = read_file(path);
    // Validate each file on its own so offsets refer to that file.
    if (bytes.size() % kCifarRecordBytes != 0) parse_cifar10(bytes, path);
    all.insert(all.end(), bytes.begin(), bytes.end());
  }
  return parse_cifar10(all, paths.size() == 1 ? paths.front() : std::string("cifar10 batches"));
}

Dataset decode_planar(std::span<const std::uint8_t> pixels, std::span<const std::uint8_t> labels,
                      std::size_t classes) {
  if (pixels.size() != labels.size() * kImageBytes) {
    throw FormatError("pixel block holds " + std::to_string(pixels.size()) + " bytes, expected " +
                      std::to_string(labels.size() * kImageBytes));
  }
  const std::size_t n = labels.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] >= classes) {
      throw FormatError("record " + std::to_string(i) + " has label " + std::to_string(labels[i]) +
                        " (expected below " + std::to_string(classes) + ")");
    }
  }
  if (n == 0) return Dataset();
  Tensor images({n, kImageSide, kImageSide, kImageChannels});
  for (std::size_t i = 0; i < n; ++i) unpack_image(pixels.data() + i * kImageBytes, images.data() + i * kImageBytes);
  return Dataset(std::move(images), std::vector<std::uint8_t>(labels.begin(), labels.end()), classes);
}

std::vector<std::uint8_t> encode_planar(const Dataset& data) {
  if (!data.empty() && data.image_shape() != Shape{kImageSide, kImageSide, kImageChannels}) {
    throw ShapeError("encode_planar: only 32x32x3 images can be written, got " + shape_string(data.image_shape()));
  }
  std::vector<std::uint8_t> out(data.size() * kImageBytes);
  const double* src = data.images().data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double* img = src + i * kImageBytes;
    std::uint8_t* dst = out.data() + i * kImageBytes;
    for (std::size_t c = 0; c < kImageChannels; ++c) {
      for (std::size_t p = 0; p < kPlane; ++p) dst[c * kPlane + p] = quantize(img[p * kImageChannels + c]);
    }
  }
  return out;
}

Dataset load_raw(const std::string& image_file, const std::string& label_file, std::size_t n, std::size_t classes) {
  const auto pixels = read_file(image_file);
  const auto labels = read_file(label_file);
  if (pixels.size() != n * kImageBytes) {
    throw FormatError(image_file + ": expected " + std::to_string(n * kImageBytes) + " bytes for " +
                      std::to_string(n) + " images, found " + std::to_string(pixels.size()));
  }
  if (labels.size() != n) {
    throw FormatError(label_file + ": expected " + std::to_string(n) + " label bytes, found " +
                      std::to_string(labels.size()));
  }
  return decode_planar(pixels, labels, classes);
}

void write_raw(const Dataset& data, const std::string& image_file, const std::string& label_file) {
  write_file(image_file, encode_planar(data));
  write_file(label_file, data.labels());
}

std::vector<std::vector<std::size_t>> minibatches(std::size_t n, std::size_t batch, std::uint64_t seed,
                                                  std::uint64_t epoch) {
  if (batch == 0) throw ConfigError("minibatches: batch size must be at least 1");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = make_rng(seed, Stream::shuffle, epoch);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch) {
    const std::size_t end = std::min(n, start + batch);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

Dataset synthetic_color_dataset(std::size_t n, std::uint64_t seed) {
  static constexpr std::array<std::array<double, 3>, 10> kPalette{{
      {1.0, 0.0, 0.0},
      {0.0, 1.0, 0.0},
      {0.0, 0.0, 1.0},
      {1.0, 1.0, 0.0},
      {0.0, 1.0, 1.0},
      {1.0, 0.0, 1.0},
      {1.0, 0.5, 0.0},
      {0.5, 0.0, 1.0},
      {1.0, 1.0, 1.0},
      {0.0, 0.0, 0.0},
  }};
  if (n == 0) return Dataset();
  auto rng = make_rng(seed, Stream::synthetic);
  std::uniform_int_distribution<int> label_dist(0, 9);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.1);

  Tensor images({n, kImageSide, kImageSide, kImageChannels});
  std::vector<std::uint8_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto label = static_cast<std::size_t>(label_dist(rng));
    labels[i] = static_cast<std::uint8_t>(label);
    const double background = 0.2 + 0.6 * unit(rng);
    const double brightness = 0.7 + 0.3 * unit(rng);
    const auto side = static_cast<std::size_t>(8 + unit(rng) * 9);  // 8..16
    const auto top = static_cast<std::size_t>(unit(rng) * static_cast<double>(kImageSide - side + 1));
    const auto left = static_cast<std::size_t>(unit(rng) * static_cast<double>(kImageSide - side + 1));
    double* img = images.data() + i * kImageBytes;
    for (std::size_t r = 0; r < kImageSide; ++r) {
      for (std::size_t c = 0; c < kImageSide; ++c) {
        const bool inside = r >= top && r < top + side && c >= left && c < left + side;
        for (std::size_t ch = 0; ch < kImageChannels; ++ch) {
          const double base = inside ? brightness * kPalette[label][ch] : background;
          img[(r * kImageSide + c) * kImageChannels + ch] = std::clamp(base + noise(rng), 0.0, 1.0);
        }
      }
    }
  }
  return Dataset(std::move(images), std::move(labels), 10);
}

Dataset random_noise_dataset(std::size_t n, std::size_t classes, std::uint64_t seed) {
  if (n == 0) return Dataset();
  if (classes == 0 || classes > 256) throw ConfigError("random_noise_dataset: classes must be in 1..256");
  auto rng = make_rng(seed, Stream::synthetic, 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> label_dist(0, classes - 1);
  Tensor images({n, kImageSide, kImageSide, kImageChannels});
  std::vector<std::uint8_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = static_cast<std::uint8_t>(label_dist(rng));
    for (std::size_t p = 0; p < kImageBytes; ++p) images[i * kImageBytes + p] = unit(rng);
  }
  return Dataset(std::move(images), std::move(labels), classes);
}

}  // namespace reconv
