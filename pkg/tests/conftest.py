# ========================================================================
#
# SPDX-FileCopyrightText: 2024 The HSI unmixing developers
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
# SPDX-License-Identifier: Apache-2.0
# ========================================================================

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from HSICore.Images import AbundanceMatrix, EndmemberMatrix, HyperspectralImage
from HSICore.Mixing import lmm_mix
from Network.Encoder import EncoderSpec
from SynthGen.Generators import gaussian_field_abundances, procedural_endmembers
from SynthGen.Scene import make_scene
from SynthGen.SceneConfig import SceneConfig

#encoder widths small enough for finite differences and fast smoke runs
TINY_HIDDEN = (4, 4, 4)


def write_json(path : Path, content : dict) -> Path:
    with open(path, "w") as f:
        json.dump(content, f)
    return path


def random_simplex(rng : np.random.Generator, R : int, N : int) -> np.ndarray:
    A = rng.random((R, N)) + 1e-3
    return A/A.sum(axis=0)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_spec() -> EncoderSpec:
    return EncoderSpec(bands=6, n_endmembers=2, hidden=TINY_HIDDEN)


@pytest.fixture
def tiny_image(rng) -> HyperspectralImage:
    """4x4 image with 6 bands mixed from 2 positive spectra.
    """
    S = EndmemberMatrix(rng.random((6, 2)) + 0.1)
    A = AbundanceMatrix(random_simplex(rng, 2, 16), 4, 4)
    return lmm_mix(S, A)


@pytest.fixture
def smoke_image() -> tuple[HyperspectralImage, AbundanceMatrix, EndmemberMatrix]:
    """Noise-free 16x16 scene with B=10, R=3.
    """
    A = gaussian_field_abundances(16, 16, 3, 2.0, seed=5)
    S = procedural_endmembers(10, 3, seed=6)
    return lmm_mix(S, A), A, S


@pytest.fixture
def small_scene():
    config = SceneConfig(height=8, width=8, R=3, B=12, correlation_length=2.0, snr_db=30.0, seed=3)
    return make_scene(config)


@pytest.fixture
def separated_library(tmp_path) -> Path:
    """CSV library of three spectra with disjoint plateaus (well conditioned mixing)."""
    B = 12
    spectra = {}
    for r, name in enumerate(["alpha", "beta", "gamma"]):
        s = np.full(B, 0.05)
        s[4*r:4*(r+1)] = 0.9
        spectra[name] = s
    path = tmp_path/"library.csv"
    with open(path, "w") as f:
        f.write(",".join(spectra) + "\n")
        for b in range(B):
            f.write(",".join(f"{spectra[n][b]:.6f}" for n in spectra) + "\n")
    return path


def _reflect(i : int, n : int) -> int:
    if i < 0:
        return -i - 1
    if i >= n:
        return 2*n - i - 1
    return i


def box_matrix(H : int, W : int, radius : int = 1) -> np.ndarray:
    """Explicit N x N box averaging matrix with half-sample reflection at the borders."""
    size = (2*radius + 1)**2
    M = np.zeros((H*W, H*W))
    for i in range(H):
        for j in range(W):
            for di in range(-radius, radius+1):
                for dj in range(-radius, radius+1):
                    M[i*W + j, _reflect(i+di, H)*W + _reflect(j+dj, W)] += 1/size
    return M
