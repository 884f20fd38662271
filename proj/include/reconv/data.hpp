#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "reconv/tensor.hpp"

namespace reconv {

inline constexpr std::size_t kImageSide = 32;
inline constexpr std::size_t kImageChannels = 3;
inline constexpr std::size_t kImageBytes = kImageSide * kImageSide * kImageChannels;  // 3072
inline constexpr std::size_t kCifarRecordBytes = kImageBytes + 1;                    // 3073

// Immutable set of labelled H x W x C images with pixel values in [0, 1].
class Dataset {
 public:
  Dataset() = default;
  // `images` is N x H x W x C. Throws FormatError if a pixel is outside
  // [0, 1] or a label is not below `classes`.
  Dataset(Tensor images, std::vector<std::uint8_t> labels, std::size_t classes);

  std::size_t size() const noexcept { return labels_.size(); }
  bool empty() const noexcept { return labels_.empty(); }
  std::size_t classes() const noexcept { return classes_; }
  Shape image_shape() const;

  Tensor image(std::size_t n) const;
  std::size_t label(std::size_t n) const { return labels_.at(n); }
  const Tensor& images() const noexcept { return images_; }
  const std::vector<std::uint8_t>& labels() const noexcept { return labels_; }

  // First `count` examples (all of them if count is 0 or exceeds size()).
  Dataset head(std::size_t count) const;

 private:
  Tensor images_;
  std::vector<std::uint8_t> labels_;
  std::size_t classes_ = 0;
};

// CIFAR-10 binary batches: 3073-byte records, one label byte followed by
// the R, G and B planes, each 32x32 row-major. Pixels map to byte / 255.
Dataset load_cifar10(const std::vector<std::string>& paths);
Dataset parse_cifar10(std::span<const std::uint8_t> bytes, const std::string& source = "<memory>");

// Raw interchange format: `image_file` holds n * 3072 bytes laid out as the
// CIFAR-10 pixel block (channel-planar, row-major); `label_file` holds n
// bytes.
Dataset load_raw(const std::string& image_file, const std::string& label_file, std::size_t n, std::size_t classes);
void write_raw(const Dataset& data, const std::string& image_file, const std::string& label_file);

// Byte encodings shared by the loaders; pixels are quantized with rounding.
std::vector<std::uint8_t> encode_planar(const Dataset& data);
Dataset decode_planar(std::span<const std::uint8_t> pixels, std::span<const std::uint8_t> labels, std::size_t classes);

// A permutation of [0, n) drawn from a generator keyed by (seed, epoch),
// split into consecutive batches; the last batch may be short.
std::vector<std::vector<std::size_t>> minibatches(std::size_t n, std::size_t batch, std::uint64_t seed,
                                                  std::uint64_t epoch);

// Ten-class colour dataset: a square of the class colour at a random
// position and size over a noisy grey background.
Dataset synthetic_color_dataset(std::size_t n, std::uint64_t seed);

// Uniform noise images with uniformly random labels.
Dataset random_noise_dataset(std::size_t n, std::size_t classes, std::uint64_t seed);

}  // namespace reconv
