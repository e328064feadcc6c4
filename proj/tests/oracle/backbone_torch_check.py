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

"""Reference forward pass for a PMBW backbone, used to freeze oracle values.

Builds the network in torch from the weight file, runs a deterministic input
through it in float64, and prints per-stage checksums plus the deep-metric
values computed from the stages with the calibration vectors in the file.
Doubles as a converter correctness check: a synthetic torch state dict pushed
through convert_backbone.py must reproduce the original module's activations.
"""

import json
import sys

import numpy as np
import torch
import torch.nn.functional as F

sys.path.insert(0, __file__.rsplit("/", 3)[0] + "/tools")
import pmbw


def forward_stages(spec, img_hwc):
    x = torch.from_numpy(img_hwc).double().permute(2, 0, 1).unsqueeze(0)
    mean = torch.tensor(np.asarray(spec["norm_mean"], dtype=np.float64)).view(1, -1, 1, 1)
    std = torch.tensor(np.asarray(spec["norm_std"], dtype=np.float64)).view(1, -1, 1, 1)
    x = (x - mean) / std
    stages = []
    for i, layer in enumerate(spec["layers"]):
        if layer["kind"] == "conv":
            w = torch.from_numpy(layer["weight"].astype(np.float64))
            b = torch.from_numpy(layer["bias"].astype(np.float64))
            x = F.conv2d(x, w, b, stride=1, padding=w.shape[2] // 2)
        elif layer["kind"] == "relu":
            x = F.relu(x)
        elif layer["kind"] == "maxpool":
            x = F.max_pool2d(x, 2)
        elif layer["kind"] == "avgpool":
            x = F.avg_pool2d(x, 2)
        if i in spec["stage_taps"]:
            stages.append(x)
    return stages


def lpips_from_stages(spec, s1, s2):
    total, off = 0.0, 0
    for a, b in zip(s1, s2):
        na = a / torch.sqrt((a * a).sum(dim=1, keepdim=True) + 1e-10)
        nb = b / torch.sqrt((b * b).sum(dim=1, keepdim=True) + 1e-10)
        d2 = (na - nb) ** 2
        c = d2.shape[1]
        w = torch.tensor(np.asarray(spec["lpips_weights"][off:off + c], dtype=np.float64))
        off += c
        total += float((d2 * w.view(1, -1, 1, 1)).sum(dim=1).mean())
    return total


def dists_from_stages(spec, x1, x2, s1, s2):
    f1 = [torch.from_numpy(x1).double().permute(2, 0, 1).unsqueeze(0)] + list(s1)
    f2 = [torch.from_numpy(x2).double().permute(2, 0, 1).unsqueeze(0)] + list(s2)
    alpha = np.asarray(spec["dists_alpha"], dtype=np.float64)
    beta = np.asarray(spec["dists_beta"], dtype=np.float64)
    wsum = alpha.sum() + beta.sum()
    c_const = 1e-6
    off, quality = 0, 0.0
    for a, b in zip(f1, f2):
        mu_a = a.mean(dim=(2, 3))
        mu_b = b.mean(dim=(2, 3))
        var_a = (a * a).mean(dim=(2, 3)) - mu_a ** 2
        var_b = (b * b).mean(dim=(2, 3)) - mu_b ** 2
        cov = (a * b).mean(dim=(2, 3)) - mu_a * mu_b
        lum = (2 * mu_a * mu_b + c_const) / (mu_a ** 2 + mu_b ** 2 + c_const)
        strc = (2 * cov + c_const) / (var_a + var_b + c_const)
        c = a.shape[1]
        wa = torch.tensor(alpha[off:off + c] / wsum)
        wb = torch.tensor(beta[off:off + c] / wsum)
        off += c
        quality += float((lum * wa).sum() + (strc * wb).sum())
    return 1.0 - quality


def det_image(h, w, c, salt):
    # Deterministic pseudo-image used on both sides of the check.
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    img = np.zeros((h, w, c))
    for ch in range(c):
        img[:, :, ch] = 0.5 + 0.25 * np.sin(2 * np.pi * (xx / (8 + 3 * ch + salt))) * \
            np.cos(2 * np.pi * (yy / (11 + 2 * ch + salt))) + \
            0.1 * np.sin(2 * np.pi * (xx + yy) / (23 + salt))
    return np.clip(img, 0.0, 1.0)


def main():
    path = sys.argv[1] if len(sys.argv) > 1 else "weights/backbone_tiny.pmbw"
    spec = pmbw.read_pmbw(path)
    x1 = det_image(64, 64, 3, 0)
    x2 = det_image(64, 64, 3, 1)
    s1 = forward_stages(spec, x1)
    s2 = forward_stages(spec, x2)
    out = {
        "stage_sums": [float(s.sum()) for s in s1],
        "stage_shapes": [list(s.shape[1:]) for s in s1],
        "lpips": lpips_from_stages(spec, s1, s2),
        "dists": dists_from_stages(spec, x1, x2, s1, s2),
    }
    print(json.dumps(out, indent=1))


if __name__ == "__main__":
    main()
