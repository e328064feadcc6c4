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

#ifndef PMET_SRC_FFT_UTIL_HPP_
#define PMET_SRC_FFT_UTIL_HPP_

namespace pmet::fftutil {

// 2-D complex DFT on h*w planes. dir = -1: forward (e^{-i...}), dir = +1:
// inverse kernel without the 1/(h*w) factor. im_in may be null (real input).
// Plans are cached per thread; planning itself is serialized globally.
void dft2(int h, int w, const double* re_in, const double* im_in,
          double* re_out, double* im_out, int dir);

}  // namespace pmet::fftutil

#endif  // PMET_SRC_FFT_UTIL_HPP_
