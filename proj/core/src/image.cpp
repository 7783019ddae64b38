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

#include "end4/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "end4/errors.hpp"

namespace end4 {
namespace {

namespace F = torch::nn::functional;

cv::Mat AsBgrMat(const RgbImage& image) {
  cv::Mat rgb(image.height, image.width, CV_8UC3,
              const_cast<uint8_t*>(image.pixels.data()));
  cv::Mat bgr;
  cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
  return bgr;
}

RgbImage FromBgrMat(const cv::Mat& bgr) {
  cv::Mat rgb;
  cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  RgbImage out(rgb.cols, rgb.rows);
  for (int y = 0; y < rgb.rows; ++y) {
    std::memcpy(&out.pixels[out.index(y, 0, 0)], rgb.ptr<uint8_t>(y),
                static_cast<size_t>(rgb.cols) * 3);
  }
  return out;
}

}  // namespace

RgbImage read_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw DataError("image file missing", {path.string()});
  }
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw DataError("cannot decode image", {path.string()});
  return FromBgrMat(bgr);
}

void write_png(const RgbImage& image, const std::filesystem::path& path) {
  const auto bytes = encode_png(image);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  FILE* f = std::fopen(path.string().c_str(), "wb");
  if (f == nullptr) throw DataError("cannot write image", {path.string()});
  const size_t written = std::fwrite(bytes.data(), 1, bytes.size(), f);
  std::fclose(f);
  if (written != bytes.size()) throw DataError("short write", {path.string()});
}

std::vector<uint8_t> encode_png(const RgbImage& image) {
  std::vector<uint8_t> out;
  cv::imencode(".png", AsBgrMat(image), out, {cv::IMWRITE_PNG_COMPRESSION, 6});
  return out;
}

std::vector<uint8_t> encode_jpeg(const RgbImage& image, int quality) {
  if (quality < 1 || quality > 100) {
    throw ParameterError("JPEG quality must be in [1, 100]");
  }
  std::vector<uint8_t> out;
  cv::imencode(".jpg", AsBgrMat(image), out, {cv::IMWRITE_JPEG_QUALITY, quality});
  return out;
}

RgbImage decode_image(std::span<const uint8_t> bytes) {
  cv::Mat buf(1, static_cast<int>(bytes.size()), CV_8UC1,
              const_cast<uint8_t*>(bytes.data()));
  cv::Mat bgr = cv::imdecode(buf, cv::IMREAD_COLOR);
  if (bgr.empty()) throw DataError("cannot decode image bytes");
  return FromBgrMat(bgr);
}

std::vector<uint8_t> encode_mask_png(const std::vector<uint8_t>& mask,
                                     int width, int height) {
  if (mask.size() != static_cast<size_t>(width) * height) {
    throw ShapeError("mask size does not match dimensions");
  }
  cv::Mat m(height, width, CV_8UC1, const_cast<uint8_t*>(mask.data()));
  std::vector<uint8_t> out;
  cv::imencode(".png", m, out);
  return out;
}

torch::Tensor to_tensor(const RgbImage& image) {
  auto hwc = torch::from_blob(const_cast<uint8_t*>(image.pixels.data()),
                              {image.height, image.width, 3}, torch::kUInt8);
  return hwc.permute({2, 0, 1}).to(torch::kFloat).div(127.5).sub(1.0).contiguous();
}

RgbImage from_tensor(const torch::Tensor& chw) {
  if (chw.dim() != 3 || chw.size(0) != 3) throw ShapeError("expected [3, H, W]");
  auto bytes = chw.detach()
                   .to(torch::kFloat)
                   .clamp(-1.0, 1.0)
                   .add(1.0)
                   .mul(127.5)
                   .round()
                   .to(torch::kUInt8)
                   .permute({1, 2, 0})
                   .contiguous();
  RgbImage out(static_cast<int>(chw.size(2)), static_cast<int>(chw.size(1)));
  std::memcpy(out.pixels.data(), bytes.data_ptr<uint8_t>(), out.pixels.size());
  return out;
}

RgbImage resize(const RgbImage& image, int width, int height) {
  if (image.width == width && image.height == height) return image;
  cv::Mat rgb(image.height, image.width, CV_8UC3,
              const_cast<uint8_t*>(image.pixels.data()));
  const bool shrink = width <= image.width && height <= image.height;
  cv::Mat out;
  cv::resize(rgb, out, cv::Size(width, height), 0, 0,
             shrink ? cv::INTER_AREA : cv::INTER_LINEAR);
  RgbImage result(width, height);
  for (int y = 0; y < height; ++y) {
    std::memcpy(&result.pixels[result.index(y, 0, 0)], out.ptr<uint8_t>(y),
                static_cast<size_t>(width) * 3);
  }
  return result;
}

torch::Tensor resize_tensor(const torch::Tensor& chw, int64_t side) {
  if (chw.dim() != 3) throw ShapeError("expected [3, H, W]");
  if (chw.size(1) == side && chw.size(2) == side) return chw;
  const bool shrink = chw.size(1) >= side && chw.size(2) >= side;
  auto opts = F::InterpolateFuncOptions().size(std::vector<int64_t>{side, side});
  if (shrink) {
    opts.mode(torch::kArea);
  } else {
    opts.mode(torch::kBilinear).align_corners(false);
  }
  return F::interpolate(chw.unsqueeze(0), opts).squeeze(0);
}

double psnr(const RgbImage& a, const RgbImage& b) {
  if (a.width != b.width || a.height != b.height) {
    throw ShapeError("psnr needs equally sized images");
  }
  double mse = 0.0;
  for (size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = static_cast<double>(a.pixels[i]) - b.pixels[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.pixels.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

std::vector<float> gaussian_blur_rgb(std::span<const float> hwc, int width,
                                     int height, double sigma) {
  if (sigma < 0.0) throw ParameterError("blur sigma must be >= 0");
  if (hwc.size() != static_cast<size_t>(width) * height * 3) {
    throw ShapeError("blur input size mismatch");
  }
  std::vector<float> out(hwc.begin(), hwc.end());
  if (sigma == 0.0) return out;

  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<size_t>(2 * radius + 1));
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-(i * i) / (2.0 * sigma * sigma));
    kernel[static_cast<size_t>(i + radius)] = w;
    total += w;
  }
  for (auto& w : kernel) w /= total;

  std::vector<float> tmp(out.size());
  auto at = [&](int y, int x, int c) {
    return (static_cast<size_t>(y) * width + x) * 3 + c;
  };
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          const int xx = std::clamp(x + k, 0, width - 1);
          acc += kernel[static_cast<size_t>(k + radius)] * out[at(y, xx, c)];
        }
        tmp[at(y, x, c)] = static_cast<float>(acc);
      }
    }
  }
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          const int yy = std::clamp(y + k, 0, height - 1);
          acc += kernel[static_cast<size_t>(k + radius)] * tmp[at(yy, x, c)];
        }
        out[at(y, x, c)] = static_cast<float>(acc);
      }
    }
  }
  return out;
}

}  // namespace end4
