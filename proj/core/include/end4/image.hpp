// Copyright 2026 The End4 Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef END4_IMAGE_HPP_
#define END4_IMAGE_HPP_

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace end4 {

// Interleaved 8-bit RGB, row-major.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> pixels;

  RgbImage() = default;
  RgbImage(int w, int h, uint8_t fill = 0)
      : width(w), height(h), pixels(static_cast<size_t>(w) * h * 3, fill) {}

  bool empty() const { return pixels.empty(); }
  size_t index(int y, int x, int c) const {
    return (static_cast<size_t>(y) * width + x) * 3 + c;
  }
  uint8_t& at(int y, int x, int c) { return pixels[index(y, x, c)]; }
  uint8_t at(int y, int x, int c) const { return pixels[index(y, x, c)]; }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

// Throws DataError when the file is missing or undecodable.
RgbImage read_image(const std::filesystem::path& path);
// Lossless PNG. Throws DataError on I/O failure.
void write_png(const RgbImage& image, const std::filesystem::path& path);

std::vector<uint8_t> encode_png(const RgbImage& image);
std::vector<uint8_t> encode_jpeg(const RgbImage& image, int quality);
RgbImage decode_image(std::span<const uint8_t> bytes);

// Single-channel 0/255 mask image as PNG bytes.
std::vector<uint8_t> encode_mask_png(const std::vector<uint8_t>& mask,
                                     int width, int height);

// [3, H, W] float tensor in [-1, 1].
torch::Tensor to_tensor(const RgbImage& image);
// Inverse of to_tensor; values are clamped to [-1, 1] and rounded.
RgbImage from_tensor(const torch::Tensor& chw);

// Area averaging when shrinking, bilinear when enlarging.
RgbImage resize(const RgbImage& image, int width, int height);
torch::Tensor resize_tensor(const torch::Tensor& chw, int64_t side);

double psnr(const RgbImage& a, const RgbImage& b);

// Separable Gaussian blur of interleaved 3-channel float pixels, kernel
// radius ceil(3 * sigma), edges replicated. sigma == 0 returns the input.
std::vector<float> gaussian_blur_rgb(std::span<const float> hwc, int width,
                                     int height, double sigma);

}  // namespace end4

#endif  // END4_IMAGE_HPP_
