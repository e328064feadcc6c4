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

"""Reader/writer for the PMBW backbone weight container.

Layout (little-endian): magic "PMBW1", version u16, layer count u32, then per
layer a kind tag u8 (1=conv, 2=relu, 3=maxpool, 4=avgpool) and rank u8. Conv
layers use rank 4 with dims [out_c, in_c, kh, kw] (u32 each) followed by the
kernel taps and out_c bias values as f32. The trailing section holds four
length-prefixed arrays: exported stage indices (u32), normalization constants
(f32, input-channel means then stds), per-channel calibration weights (f32),
and the structure/texture weight pair (f32 each, covering the raw input stage
plus every exported stage). A CRC32 of all preceding bytes closes the file.
"""

import struct
import zlib

import numpy as np


def write_pmbw(path, layers, stage_taps, norm_mean, norm_std,
               lpips_weights=(), dists_alpha=(), dists_beta=()):
    out = bytearray()
    out += b"PMBW1"
    out += struct.pack("<HI", 1, len(layers))
    for layer in layers:
        kind = layer["kind"]
        tag = {"conv": 1, "relu": 2, "maxpool": 3, "avgpool": 4}[kind]
        if kind == "conv":
            w = np.ascontiguousarray(layer["weight"], dtype="<f4")
            b = np.ascontiguousarray(layer["bias"], dtype="<f4")
            oc, ic, kh, kw = w.shape
            assert b.shape == (oc,)
            out += struct.pack("<BB", tag, 4)
            out += struct.pack("<IIII", oc, ic, kh, kw)
            out += w.tobytes()
            out += b.tobytes()
        else:
            out += struct.pack("<BB", tag, 0)

    def f32_block(values):
        arr = np.ascontiguousarray(values, dtype="<f4")
        return struct.pack("<I", arr.size) + arr.tobytes()

    out += struct.pack("<I", len(stage_taps))
    for t in stage_taps:
        out += struct.pack("<I", t)
    norm = list(norm_mean) + list(norm_std)
    out += f32_block(norm)
    out += f32_block(lpips_weights)
    out += f32_block(dists_alpha)
    out += f32_block(dists_beta)
    out += struct.pack("<I", zlib.crc32(bytes(out)) & 0xFFFFFFFF)
    with open(path, "wb") as f:
        f.write(bytes(out))


def read_pmbw(path):
    with open(path, "rb") as f:
        buf = f.read()
    crc = struct.unpack("<I", buf[-4:])[0]
    if crc != (zlib.crc32(buf[:-4]) & 0xFFFFFFFF):
        raise ValueError("checksum mismatch")
    if buf[:5] != b"PMBW1":
        raise ValueError("bad magic")
    pos = 5
    version, n_layers = struct.unpack_from("<HI", buf, pos)
    pos += 6
    if version != 1:
        raise ValueError("unsupported version")
    layers = []
    for _ in range(n_layers):
        tag, rank = struct.unpack_from("<BB", buf, pos)
        pos += 2
        kind = {1: "conv", 2: "relu", 3: "maxpool", 4: "avgpool"}[tag]
        if kind == "conv":
            oc, ic, kh, kw = struct.unpack_from("<IIII", buf, pos)
            pos += 16
            n = oc * ic * kh * kw
            w = np.frombuffer(buf, "<f4", n, pos).reshape(oc, ic, kh, kw).copy()
            pos += 4 * n
            b = np.frombuffer(buf, "<f4", oc, pos).copy()
            pos += 4 * oc
            layers.append({"kind": kind, "weight": w, "bias": b})
        else:
            assert rank == 0
            layers.append({"kind": kind})

    def u32_block():
        nonlocal pos
        (n,) = struct.unpack_from("<I", buf, pos)
        pos += 4
        vals = struct.unpack_from(f"<{n}I", buf, pos)
        pos += 4 * n
        return list(vals)

    def f32_block():
        nonlocal pos
        (n,) = struct.unpack_from("<I", buf, pos)
        pos += 4
        arr = np.frombuffer(buf, "<f4", n, pos).copy()
        pos += 4 * n
        return arr

    stage_taps = u32_block()
    norm = f32_block()
    lpips_weights = f32_block()
    dists_alpha = f32_block()
    dists_beta = f32_block()
    assert pos == len(buf) - 4, "trailing bytes"
    half = len(norm) // 2
    return {
        "layers": layers,
        "stage_taps": stage_taps,
        "norm_mean": norm[:half],
        "norm_std": norm[half:],
        "lpips_weights": lpips_weights,
        "dists_alpha": dists_alpha,
        "dists_beta": dists_beta,
    }
