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

"""Converts publicly released VGG16 parameter dumps into a PMBW file.

Inputs are torch checkpoints:
  --vgg16 vgg16.pth                torchvision VGG16 state dict (features.*)
  --lpips lpips_vgg.pth            linear calibration heads (lin{0..4}.model.1.weight)
  --dists dists.pt                 alpha/beta stage-channel weights
  --pool {max,avg}                 pooling written into the file

Feature stages export after relu1_2, relu2_2, relu3_3, relu4_3 and relu5_3.
Input normalization defaults to the ImageNet mean/std convention on [0,1]
inputs; --lpips-norm stores the calibration network's shift/scale convention
instead (equivalent per-channel mean/std after folding its [-1,1] input map).
"""

import argparse

import numpy as np

import pmbw

VGG16_PLAN = [64, 64, "P", 128, 128, "P", 256, 256, 256, "P",
              512, 512, 512, "P", 512, 512, 512]
STAGE_AFTER_CONV = {1, 3, 6, 9, 12}  # 0-based conv index of *_2/*_3 relus


def load_state_dict(path):
    import torch
    obj = torch.load(path, map_location="cpu", weights_only=False)
    if hasattr(obj, "state_dict"):
        obj = obj.state_dict()
    if "state_dict" in obj and isinstance(obj["state_dict"], dict):
        obj = obj["state_dict"]
    return {k: v.detach().cpu().numpy() for k, v in obj.items()}


def main():
    ap = argparse.ArgumentParser(description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--vgg16", required=True)
    ap.add_argument("--lpips")
    ap.add_argument("--dists")
    ap.add_argument("--pool", choices=["max", "avg"], default="max")
    ap.add_argument("--lpips-norm", action="store_true",
                    help="store the calibration network's input scaling")
    ap.add_argument("--out", required=True)
    args = ap.parse_args()

    sd = load_state_dict(args.vgg16)
    # torchvision layout: features.<idx>.weight / .bias with convs at
    # 0,2,5,7,10,12,14,17,19,21,24,26,28.
    conv_idx = [0, 2, 5, 7, 10, 12, 14, 17, 19, 21, 24, 26, 28]

    layers = []
    stage_taps = []
    conv_count = 0
    for item in VGG16_PLAN:
        if item == "P":
            layers.append({"kind": "maxpool" if args.pool == "max" else "avgpool"})
            continue
        key = f"features.{conv_idx[conv_count]}"
        layers.append({"kind": "conv",
                       "weight": sd[f"{key}.weight"],
                       "bias": sd[f"{key}.bias"]})
        layers.append({"kind": "relu"})
        if conv_count in STAGE_AFTER_CONV:
            stage_taps.append(len(layers) - 1)
        conv_count += 1

    if args.lpips_norm:
        shift = np.array([-0.030, -0.088, -0.188])
        scale = np.array([0.458, 0.448, 0.450])
        norm_mean = (1.0 + shift) / 2.0
        norm_std = scale / 2.0
    else:
        norm_mean = [0.485, 0.456, 0.406]
        norm_std = [0.229, 0.224, 0.225]

    lpips_w = []
    if args.lpips:
        lsd = load_state_dict(args.lpips)
        for i in range(5):
            for key in (f"lin{i}.model.1.weight", f"lins.{i}.model.1.weight"):
                if key in lsd:
                    lpips_w.extend(np.asarray(lsd[key]).reshape(-1).tolist())
                    break
            else:
                raise KeyError(f"calibration head {i} not found in {args.lpips}")

    alpha, beta = [], []
    if args.dists:
        dsd = load_state_dict(args.dists)
        alpha = np.asarray(dsd["alpha"]).reshape(-1).tolist()
        beta = np.asarray(dsd["beta"]).reshape(-1).tolist()

    pmbw.write_pmbw(args.out, layers, stage_taps, norm_mean, norm_std,
                    lpips_w, alpha, beta)
    print(f"wrote {args.out}: {len(layers)} layers, stages {stage_taps}, "
          f"lpips={len(lpips_w)} dists={len(alpha)}/{len(beta)}")


if __name__ == "__main__":
    main()
