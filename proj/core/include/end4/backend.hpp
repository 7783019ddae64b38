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

#ifndef END4_BACKEND_HPP_
#define END4_BACKEND_HPP_

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "end4/image.hpp"
#include "end4/masks.hpp"

namespace end4 {

// Anything that, given (image, mask, prompt), returns the image with the
// masked region regenerated. Implementations must be safe to call from
// several threads at once.
class InpaintingBackend {
 public:
  virtual ~InpaintingBackend() = default;
  virtual std::string name() const = 0;
  // `mask` is width * height bytes, nonzero inside the region to replace.
  virtual RgbImage inpaint(const RgbImage& image, const std::vector<uint8_t>& mask,
                           const std::string& prompt, uint64_t seed) = 0;
};

// Desk-scale test double. Inside the mask: Gaussian blur, additive Gaussian
// noise and a small hue rotation. Outside the mask the input bytes are
// copied unchanged. This is a learnable harness signal, not a model of any
// diffusion inpainter.
class LocalSyntheticBackend : public InpaintingBackend {
 public:
  struct Options {
    double blur_sigma = 2.0;
    double noise_std = 0.15;  // in [0, 1] intensity units
    double hue_turns = 0.04;
  };

  LocalSyntheticBackend() = default;
  explicit LocalSyntheticBackend(Options options) : options_(options) {}

  std::string name() const override { return "local-synthetic"; }
  RgbImage inpaint(const RgbImage& image, const std::vector<uint8_t>& mask,
                   const std::string& prompt, uint64_t seed) override;

 private:
  Options options_;
};

// HTTP client for a remote diffusion inpainting service.
//
// Request:  POST <url>, Content-Type: application/json
//   {"image": <base64 PNG>, "mask": <base64 PNG, 0/255 gray>,
//    "prompt": <string>, "steps": 20, "seed": <uint64>}
// Response: 200 with {"image": <base64 PNG or JPEG>} of the same size.
//
// Connection failures, timeouts, 408, 429 and 5xx are retried with
// exponential backoff; after max_retries the call fails with TransportError.
// Any other status or an unusable body raises ProtocolError.
class RemoteInpaintingBackend : public InpaintingBackend {
 public:
  struct Options {
    std::string url;  // scheme://host[:port]/path
    std::string token;
    std::string name = "remote";
    int steps = 20;
    double timeout_seconds = 120.0;
    int max_retries = 3;
    double backoff_seconds = 1.0;
  };

  explicit RemoteInpaintingBackend(Options options);

  // Reads END4_BACKEND_URL (required) and END4_BACKEND_TOKEN (optional).
  static Options options_from_environment();

  std::string name() const override { return options_.name; }
  RgbImage inpaint(const RgbImage& image, const std::vector<uint8_t>& mask,
                   const std::string& prompt, uint64_t seed) override;

 private:
  Options options_;
  std::string scheme_host_port_;
  std::string path_;
};

std::unique_ptr<InpaintingBackend> make_backend(const std::string& kind);

// Rasterizes `region` and calls the backend.
RgbImage synthesize(InpaintingBackend& backend, const RgbImage& image,
                    const MaskRegion& region, const std::string& prompt,
                    uint64_t seed, std::span<const Annotation> annotations = {});

std::string base64_encode(std::span<const uint8_t> bytes);
// Throws ProtocolError on malformed input.
std::vector<uint8_t> base64_decode(std::string_view text);

}  // namespace end4

#endif  // END4_BACKEND_HPP_
