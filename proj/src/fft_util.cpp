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

#include "fft_util.hpp"

#include <fftw3.h>

#include <cstdint>
#include <map>
#include <mutex>

namespace pmet::fftutil {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct CachedPlan {
  fftw_plan plan = nullptr;
  fftw_complex* in = nullptr;
  fftw_complex* out = nullptr;
  int n = 0;

  ~CachedPlan() {
    // Plan destruction also requires the planner lock; skip at thread exit
    // and let the process reclaim the memory.
  }
};

CachedPlan& get_plan(int h, int w, int dir) {
  thread_local std::map<uint64_t, CachedPlan> cache;
  uint64_t key = (static_cast<uint64_t>(h) << 33) | (static_cast<uint64_t>(w) << 1) |
                 (dir > 0 ? 1u : 0u);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  CachedPlan& p = cache[key];
  p.n = h * w;
  p.in = fftw_alloc_complex(static_cast<size_t>(p.n));
  p.out = fftw_alloc_complex(static_cast<size_t>(p.n));
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    p.plan = fftw_plan_dft_2d(h, w, p.in, p.out,
                              dir < 0 ? FFTW_FORWARD : FFTW_BACKWARD,
                              FFTW_ESTIMATE);
  }
  return p;
}

}  // namespace

void dft2(int h, int w, const double* re_in, const double* im_in,
          double* re_out, double* im_out, int dir) {
  CachedPlan& p = get_plan(h, w, dir);
  for (int i = 0; i < p.n; ++i) {
    p.in[i][0] = re_in[i];
    p.in[i][1] = im_in ? im_in[i] : 0.0;
  }
  fftw_execute(p.plan);
  for (int i = 0; i < p.n; ++i) {
    re_out[i] = p.out[i][0];
    im_out[i] = p.out[i][1];
  }
}

}  // namespace pmet::fftutil
