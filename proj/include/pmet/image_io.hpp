// Copyright 2026 The Pmet Authors.
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

#ifndef PMET_IMAGE_IO_HPP_
#define PMET_IMAGE_IO_HPP_

#include <string>

#include "pmet/tensor.hpp"

namespace pmet {

// Reads an 8-bit PNG or PPM/PGM file into [0,1] samples (value/255).
// Grayscale files load as 1 channel, color as 3; alpha is rejected.
Tensor read_image(const std::string& path);

// Writes an image as 8-bit PNG (".png") or binary PPM/PGM (".ppm"/".pgm").
// Samples are clipped to [0,1] and quantized by round(v*255).
void write_image(const Tensor& img, const std::string& path);

// Serializes raw samples as little-endian 32-bit floats (debug dumps).
void write_raw_f32(const Tensor& img, const std::string& path);

}  // namespace pmet

#endif  // PMET_IMAGE_IO_HPP_
