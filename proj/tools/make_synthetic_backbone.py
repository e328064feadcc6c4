#!/usr/bin/env python3
# Copyright 2026 The Pmet Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Generates the bundled five-stage test backbone.

The network follows the usual conv/relu/pool feature-extractor shape at
reduced width, with seeded He-normal kernels, so the deep metrics and their
gradients can be exercised and regression-tested without third-party
checkpoints. Converted published weights (see convert_backbone.py) drop into
the same container.
"""

import argparse

import numpy as np

import pmbw


def build(seed):
    rng = np.random.Generator(np.random.PCG64(seed))
    plan = [(3, 12), (12, 12), "P",
            (12, 24), (24, 24), "P",
            (24, 48), (48, 48), "P",
            (48, 64), (64, 64), "P",
            (64, 64), (64, 64)]
    layers = []
    stage_ends = {1, 3, 5, 7, 9}  # export after the 2nd relu of each block
    conv_count = 0
    stage_taps = []
    for item in plan:
        if item == "P":
            layers.append({"kind": "maxpool"})
            continue
        ic, oc = item
        std = np.sqrt(2.0 / (ic * 9))
        w = rng.normal(0.0, std, size=(oc, ic, 3, 3)).astype(np.float32)
        b = rng.normal(0.0, 0.01, size=(oc,)).astype(np.float32)
        layers.append({"kind": "conv", "weight": w, "bias": b})
        layers.append({"kind": "relu"})
        if conv_count in stage_ends:
            stage_taps.append(len(layers) - 1)
        conv_count += 1

    stage_channels = [12, 24, 48, 64, 64]
    lpips_w = np.abs(rng.normal(0.0, 0.1, size=(sum(stage_channels),))).astype(np.float32)
    n_st = 3 + sum(stage_channels)
    alpha = np.abs(rng.normal(0.0, 1.0, size=(n_st,))).astype(np.float32)
    beta = np.abs(rng.normal(0.0, 1.0, size=(n_st,))).astype(np.float32)
    return layers, stage_taps, lpips_w, alpha, beta


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="weights/backbone_tiny.pmbw")
    ap.add_argument("--seed", type=int, default=20260810)
    args = ap.parse_args()
    layers, stage_taps, lpips_w, alpha, beta = build(args.seed)
    pmbw.write_pmbw(args.out, layers, stage_taps,
                    norm_mean=[0.5, 0.5, 0.5], norm_std=[0.5, 0.5, 0.5],
                    lpips_weights=lpips_w, dists_alpha=alpha, dists_beta=beta)
    print(f"wrote {args.out} ({len(layers)} layers, stages at {stage_taps})")


if __name__ == "__main__":
    main()
