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
"""Writes the bundled 9-channel cobblestone material.

albedo (3), normal (3), roughness (1), metalness (1), ao (1), tileable,
every map derived from one Voronoi height field so features line up.
"""

import argparse
import json
import pathlib

import numpy as np
from PIL import Image


def voronoi(size, cells, rng):
  points = rng.uniform(0, size, (cells, 2))
  yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
  best = np.full((size, size), np.inf)
  second = np.full((size, size), np.inf)
  owner = np.zeros((size, size), np.int64)
  for i, (py, px) in enumerate(points):
    dy = np.abs(yy - py)
    dx = np.abs(xx - px)
    dy = np.minimum(dy, size - dy)
    dx = np.minimum(dx, size - dx)
    d = np.hypot(dy, dx)
    closer = d < best
    second = np.where(closer, best, np.minimum(second, d))
    owner = np.where(closer, i, owner)
    best = np.where(closer, d, best)
  return owner, second - best


def main():
  parser = argparse.ArgumentParser(description=__doc__)
  parser.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data" / "sample_material"))
  parser.add_argument("--size", type=int, default=128)
  parser.add_argument("--seed", type=int, default=7)
  args = parser.parse_args()
  rng = np.random.default_rng(args.seed)
  n = args.size
  cells = max(4, (n * n) // 400)

  owner, edge = voronoi(n, cells, rng)
  stone = np.clip(edge / 6.0, 0.0, 1.0)
  height = np.sqrt(stone) * (0.7 + 0.3 * rng.uniform(size=cells)[owner])
  height += 0.03 * rng.standard_normal((n, n))

  gy = (np.roll(height, -1, 0) - np.roll(height, 1, 0)) * 0.5
  gx = (np.roll(height, -1, 1) - np.roll(height, 1, 1)) * 0.5
  strength = 4.0
  normal = np.stack([-gx * strength, -gy * strength, np.ones_like(height)], axis=-1)
  normal /= np.linalg.norm(normal, axis=-1, keepdims=True)
  normal = normal * 0.5 + 0.5

  tint = rng.uniform(0.75, 1.0, (cells, 3)) * np.array([0.62, 0.56, 0.50])
  mortar = np.array([0.22, 0.21, 0.20])
  albedo = stone[..., None] * tint[owner] + (1.0 - stone[..., None]) * mortar
  albedo += 0.02 * rng.standard_normal((n, n, 1))

  roughness = 0.95 - 0.35 * stone + 0.03 * rng.standard_normal((n, n))
  metal_cells = rng.uniform(size=cells) < 0.15
  metalness = np.where(metal_cells[owner] & (stone > 0.5), 0.9, 0.0)

  blurred = height.copy()
  for _ in range(4):
    blurred = (blurred + np.roll(blurred, 1, 0) + np.roll(blurred, -1, 0) + np.roll(blurred, 1, 1) +
               np.roll(blurred, -1, 1)) / 5.0
  ao = np.clip(1.0 - 1.5 * np.maximum(blurred - height, 0.0) - 0.35 * (1.0 - stone), 0.0, 1.0)

  out = pathlib.Path(args.out)
  out.mkdir(parents=True, exist_ok=True)
  maps = {"albedo": albedo, "normal": normal, "roughness": roughness, "metalness": metalness, "ao": ao}
  manifest = {}
  for name, values in maps.items():
    data = np.clip(values, 0.0, 1.0)
    image = Image.fromarray(np.floor(data * 255.0 + 0.5).astype(np.uint8))
    image.save(out / f"{name}.png")
    manifest[name] = {"path": f"{name}.png", "channels": 3 if data.ndim == 3 else 1}
  (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


if __name__ == "__main__":
  main()
