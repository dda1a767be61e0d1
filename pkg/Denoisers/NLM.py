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

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from HSICore.Errors import ConstraintError, DimensionError


def nlm_denoise_band(X : np.ndarray, patch_radius : int, window_radius : int, h : float) -> np.ndarray:
    """Non-local means of a 2-D band.
        Every pixel becomes the weighted mean of the pixels of its search window,
        w(p,q) = exp(-||patch_p - patch_q||^2/h^2), patches taken from the reflect-padded band.
        The loop runs over window offsets, so the result does not depend on a pixel visiting order.

    Args:
        X (np.ndarray): H x W band.
        patch_radius (int): Patch radius, the patches are (2*patch_radius+1)^2.
        window_radius (int): Search window radius.
        h (float): Filtering strength.

    Raises:
        DimensionError: If the band is not larger than 2*patch_radius in both directions.
        ConstraintError: If h <= 0 or a radius is negative.

    Returns:
        np.ndarray: H x W denoised band.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionError(f"NLM filters 2-D bands, got {X.ndim} dimension(s).")
    H, W = X.shape
    if patch_radius < 0 or window_radius < 0:
        raise ConstraintError("NLM radii must be nonnegative.")
    if not h > 0:
        raise ConstraintError(f"NLM filtering strength must be positive, got {h}.")
    if H <= 2*patch_radius or W <= 2*patch_radius:
        raise DimensionError(f"Band {H}x{W} too small for patch radius {patch_radius}.")

    pr, wr = patch_radius, window_radius
    pad = pr + wr
    P = np.pad(X, pad, mode="symmetric")
    k = 2*pr + 1

    #band with a margin of one patch radius, the reference patches
    reference = P[wr:wr+H+2*pr, wr:wr+W+2*pr]

    numerator = np.zeros((H, W))
    denominator = np.zeros((H, W))
    for dy in range(-wr, wr+1):
        for dx in range(-wr, wr+1):
            shifted = P[wr+dy:wr+dy+H+2*pr, wr+dx:wr+dx+W+2*pr]
            distance = sliding_window_view((reference-shifted)**2, (k, k)).sum(axis=(-2, -1))
            weight = np.exp(-distance/h**2)
            numerator += weight*shifted[pr:pr+H, pr:pr+W]
            denominator += weight

    return numerator/denominator
