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

#include "end4/backend.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <random>
#include <thread>

#include <openssl/evp.h>

#include "end4/errors.hpp"
#include "httplib.h"
#include "json.hpp"

namespace end4 {
namespace {

using nlohmann::json;

// Hue rotation by `turns` in YIQ space applied to one [0, 1] RGB pixel.
struct HueRotation {
  explicit HueRotation(double turns) {
    const double t = 2.0 * std::numbers::pi * turns;
    const double c = std::cos(t);
    const double s = std::sin(t);
    constexpr double kToYiq[3][3] = {{0.299, 0.587, 0.114},
                                     {0.596, -0.274, -0.322},
                                     {0.211, -0.523, 0.312}};
    constexpr double kToRgb[3][3] = {{1.0, 0.956, 0.621},
                                     {1.0, -0.272, -0.647},
                                     {1.0, -1.106, 1.703}};
    const double rot[3][3] = {{1, 0, 0}, {0, c, -s}, {0, s, c}};
    double tmp[3][3] = {};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) tmp[i][j] += rot[i][k] * kToYiq[k][j];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        m[i][j] = 0.0;
        for (int k = 0; k < 3; ++k) m[i][j] += kToRgb[i][k] * tmp[k][j];
      }
  }
  double m[3][3];
};

bool Retryable(int status) {
  return status == 408 || status == 429 || (status >= 500 && status <= 599);
}

}  // namespace

RgbImage LocalSyntheticBackend::inpaint(const RgbImage& image,
                                        const std::vector<uint8_t>& mask,
                                        const std::string& /*prompt*/,
                                        uint64_t seed) {
  if (mask.size() != static_cast<size_t>(image.width) * image.height) {
    throw ShapeError("mask does not match image dimensions");
  }
  std::vector<float> unit(image.pixels.size());
  for (size_t i = 0; i < unit.size(); ++i) unit[i] = image.pixels[i] / 255.0f;
  const auto blurred =
      gaussian_blur_rgb(unit, image.width, image.height, options_.blur_sigma);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, options_.noise_std);
  const HueRotation hue(options_.hue_turns);

  RgbImage out = image;
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      if (mask[static_cast<size_t>(y) * image.width + x] == 0) continue;
      double px[3];
      for (int c = 0; c < 3; ++c) {
        px[c] = blurred[image.index(y, x, c)] + noise(rng);
      }
      for (int c = 0; c < 3; ++c) {
        const double v =
            hue.m[c][0] * px[0] + hue.m[c][1] * px[1] + hue.m[c][2] * px[2];
        out.at(y, x, c) =
            static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
      }
    }
  }
  return out;
}

RemoteInpaintingBackend::RemoteInpaintingBackend(Options options)
    : options_(std::move(options)) {
  const auto scheme_end = options_.url.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("backend URL needs a scheme: " + options_.url);
  }
  const auto path_start = options_.url.find('/', scheme_end + 3);
  scheme_host_port_ = options_.url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : options_.url.substr(path_start);
  if (options_.max_retries < 0) throw ConfigError("max_retries must be >= 0");
}

RemoteInpaintingBackend::Options RemoteInpaintingBackend::options_from_environment() {
  Options opts;
  const char* url = std::getenv("END4_BACKEND_URL");
  if (url == nullptr || *url == '\0') {
    throw ConfigError("END4_BACKEND_URL is not set");
  }
  opts.url = url;
  if (const char* token = std::getenv("END4_BACKEND_TOKEN")) opts.token = token;
  return opts;
}

RgbImage RemoteInpaintingBackend::inpaint(const RgbImage& image,
                                          const std::vector<uint8_t>& mask,
                                          const std::string& prompt,
                                          uint64_t seed) {
  const json request = {
      {"image", base64_encode(encode_png(image))},
      {"mask", base64_encode(encode_mask_png(mask, image.width, image.height))},
      {"prompt", prompt},
      {"steps", options_.steps},
      {"seed", seed}};
  const std::string body = request.dump();

  httplib::Headers headers;
  if (!options_.token.empty()) {
    headers.emplace("Authorization", "Bearer " + options_.token);
  }

  std::string last_error;
  for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
    if (attempt > 0) {
      const double delay = options_.backoff_seconds * std::pow(2.0, attempt - 1);
      std::this_thread::sleep_for(std::chrono::duration<double>(delay));
    }
    httplib::Client client(scheme_host_port_);
    const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::duration<double>(options_.timeout_seconds));
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    auto res = client.Post(path_, headers, body, "application/json");
    if (!res) {
      last_error = "request failed: " + httplib::to_string(res.error());
      continue;
    }
    if (Retryable(res->status)) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw ProtocolError("backend returned HTTP " + std::to_string(res->status));
    }
    json reply;
    try {
      reply = json::parse(res->body);
    } catch (const json::exception&) {
      throw ProtocolError("backend response is not JSON");
    }
    if (!reply.is_object() || !reply.contains("image") || !reply["image"].is_string()) {
      throw ProtocolError("backend response lacks an image field");
    }
    const auto bytes = base64_decode(reply["image"].get<std::string>());
    RgbImage out;
    try {
      out = decode_image(bytes);
    } catch (const DataError&) {
      throw ProtocolError("backend image is not decodable");
    }
    if (out.width != image.width || out.height != image.height) {
      throw ProtocolError("backend image has the wrong size");
    }
    return out;
  }
  throw TransportError("backend unavailable after " +
                       std::to_string(options_.max_retries + 1) +
                       " attempts: " + last_error);
}

std::unique_ptr<InpaintingBackend> make_backend(const std::string& kind) {
  if (kind == "local") return std::make_unique<LocalSyntheticBackend>();
  if (kind == "remote") {
    return std::make_unique<RemoteInpaintingBackend>(
        RemoteInpaintingBackend::options_from_environment());
  }
  throw ConfigError("unknown backend '" + kind + "' (expected local|remote)");
}

RgbImage synthesize(InpaintingBackend& backend, const RgbImage& image,
                    const MaskRegion& region, const std::string& prompt,
                    uint64_t seed, std::span<const Annotation> annotations) {
  if (!bbox_inside(region.bbox, image.width, image.height)) {
    throw ParameterError("mask region lies outside the image");
  }
  const auto mask = rasterize_mask(region, image.width, image.height, annotations);
  return backend.inpaint(image, mask, prompt, seed);
}

std::string base64_encode(std::span<const uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                bytes.data(), static_cast<int>(bytes.size()));
  out.resize(static_cast<size_t>(n));
  return out;
}

std::vector<uint8_t> base64_decode(std::string_view text) {
  std::string clean;
  clean.reserve(text.size());
  for (char c : text) {
    if (c != '\n' && c != '\r' && c != ' ') clean.push_back(c);
  }
  if (clean.size() % 4 != 0) throw ProtocolError("malformed base64 length");
  std::vector<uint8_t> out(clean.size() / 4 * 3);
  const int n = EVP_DecodeBlock(out.data(),
                                reinterpret_cast<const unsigned char*>(clean.data()),
                                static_cast<int>(clean.size()));
  if (n < 0) throw ProtocolError("malformed base64 payload");
  size_t padding = 0;
  if (!clean.empty() && clean.back() == '=') ++padding;
  if (clean.size() > 1 && clean[clean.size() - 2] == '=') ++padding;
  out.resize(static_cast<size_t>(n) - padding);
  return out;
}

}  // namespace end4
