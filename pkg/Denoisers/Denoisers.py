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

from typing import Callable

import numpy as np
from joblib import Parallel, delayed
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy.ndimage import uniform_filter

from HSICore.Errors import DimensionError
from Denoisers.NLM import nlm_denoise_band

import logging
logger = logging.getLogger(__name__)


class NLMParams(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)
    patch_radius : int = Field(default=1, ge=0)
    window_radius : int = Field(default=5, ge=0)
    h : float = Field(default=0.1, gt=0)


class BoxParams(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)
    radius : int = Field(default=1, ge=0)


def _identity(X : np.ndarray, spec : DenoiserSpec) -> np.ndarray:
    return X.copy()


def _box(X : np.ndarray, spec : DenoiserSpec) -> np.ndarray:
    return box_denoise_band(X, spec.box.radius)


def _nlm(X : np.ndarray, spec : DenoiserSpec) -> np.ndarray:
    return nlm_denoise_band(X, spec.nlm.patch_radius, spec.nlm.window_radius, spec.nlm.h)


#key: kind, value: function (band, spec) -> band
_DENOISERS : dict[str, Callable[[np.ndarray, "DenoiserSpec"], np.ndarray]] = {
    "identity": _identity,
    "box": _box,
    "nlm": _nlm,
}


def register_denoiser(kind : str, fn : Callable[[np.ndarray, "DenoiserSpec"], np.ndarray]):
    """Register a further 2-D denoiser.

    Args:
        kind (str): Name used in DenoiserSpec.kind.
        fn (Callable): Function (H x W band, spec) -> H x W band.
    """
    if kind in _DENOISERS:
        raise ValueError(f"Denoiser '{kind}' is already registered.")
    _DENOISERS[kind] = fn


def available_denoisers() -> list[str]:
    return sorted(_DENOISERS)


class DenoiserSpec(BaseModel):
    """Selection and parameters of a denoiser.
    """
    model_config = ConfigDict(extra="forbid", frozen=True)
    kind : str = "nlm"
    nlm : NLMParams = Field(default_factory=NLMParams)
    box : BoxParams = Field(default_factory=BoxParams)

    @field_validator("kind")
    @classmethod
    def _known_kind(cls, v):
        if v not in _DENOISERS:
            raise ValueError(f"unknown denoiser '{v}', available: {available_denoisers()}")
        return v


def box_denoise_band(X : np.ndarray, radius : int) -> np.ndarray:
    """Mean over a (2*radius+1)^2 box, reflect padded.
        With half-sample reflection the operator is a symmetric matrix.
    """
    if radius == 0:
        return np.array(X, dtype=np.float64)
    return uniform_filter(np.asarray(X, dtype=np.float64), size=2*radius+1, mode="reflect")


def denoise(A, grid : tuple[int, int], spec : DenoiserSpec, n_jobs : int = 1) -> np.ndarray:
    """Denoise every abundance channel as a 2-D image.
        The result is not projected onto the simplex.

    Args:
        A (AbundanceMatrix | np.ndarray): R x N abundances.
        grid (tuple[int, int]): (H, W) with H*W = N.
        spec (DenoiserSpec): Denoiser.
        n_jobs (int, optional): Number of channels denoised in parallel. Defaults to 1.

    Raises:
        DimensionError: If the grid does not fit N.

    Returns:
        np.ndarray: R x N denoised channels.
    """
    A = np.asarray(getattr(A, "data", A), dtype=np.float64)
    H, W = grid
    if A.ndim != 2 or A.shape[1] != H*W:
        raise DimensionError(f"Abundances of shape {A.shape} do not fit a {H}x{W} grid.")

    fn = _DENOISERS[spec.kind]
    channels = A.reshape(A.shape[0], H, W)
    if n_jobs > 1 and A.shape[0] > 1:
        out = Parallel(n_jobs=n_jobs, prefer="threads")(delayed(fn)(c, spec) for c in channels)
    else:
        out = [fn(c, spec) for c in channels]
    return np.stack(out).reshape(A.shape[0], H*W)
