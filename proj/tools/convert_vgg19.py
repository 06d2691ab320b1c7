#!/usr/bin/env python3
# Copyright 2026 The mtex Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
# ==============================================================================
"""Converts a torchvision VGG-19 state dict into an MTXA weights archive.

    python3 tools/convert_vgg19.py vgg19-dcbb9e9d.pth vgg19.mtxa

Only the convolutional part is kept. Entries are named conv{block}_{index}
.weight (out, in, 3, 3) and .bias (out,), stored as little-endian float32.
"""

import argparse
import json
import struct
import sys

import numpy as np

# Offsets of the convolutions inside torchvision's vgg19().features.
FEATURE_INDICES = [0, 2, 5, 7, 10, 12, 14, 16, 19, 21, 23, 25, 28, 30, 32, 34]
BLOCK_SIZES = [2, 2, 4, 4, 4]


def conv_names():
  names = []
  for block, size in enumerate(BLOCK_SIZES, start=1):
    names += [f"conv{block}_{i}" for i in range(1, size + 1)]
  return names


def load_state_dict(path):
  import torch
  state = torch.load(path, map_location="cpu")
  if isinstance(state, dict) and "state_dict" in state:
    state = state["state_dict"]
  return {k: v.detach().cpu().numpy() for k, v in state.items()}


def write_mtxa(path, metadata, entries):
  meta = json.dumps(metadata).encode("utf-8")
  with open(path, "wb") as out:
    out.write(b"MTXA")
    out.write(struct.pack("<IQ", 1, len(meta)))
    out.write(meta)
    out.write(struct.pack("<I", len(entries)))
    for name, array in entries:
      data = np.ascontiguousarray(array, dtype="<f4")
      encoded = name.encode("utf-8")
      out.write(struct.pack("<I", len(encoded)))
      out.write(encoded)
      out.write(struct.pack("<BI", 1, data.ndim))
      out.write(struct.pack(f"<{data.ndim}I", *data.shape))
      out.write(data.tobytes())


def main(argv):
  parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
  parser.add_argument("state_dict", help="torchvision vgg19 .pth file")
  parser.add_argument("output", help="destination .mtxa")
  args = parser.parse_args(argv)

  state = load_state_dict(args.state_dict)
  entries = []
  for index, name in zip(FEATURE_INDICES, conv_names()):
    weight = state.get(f"features.{index}.weight")
    bias = state.get(f"features.{index}.bias")
    if weight is None or bias is None:
      sys.exit(f"missing features.{index} ({name}) in {args.state_dict}")
    entries.append((f"{name}.weight", weight))
    entries.append((f"{name}.bias", bias))
  write_mtxa(args.output, {"source": "torchvision vgg19", "layers": len(FEATURE_INDICES)}, entries)
  print(f"wrote {len(entries)} arrays to {args.output}")


if __name__ == "__main__":
  main(sys.argv[1:])
