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

from dataclasses import dataclass
from itertools import permutations
from typing import Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from HSICore.Errors import ConstraintError, DimensionError
from HSICore.Images import AbundanceMatrix, EndmemberMatrix, HyperspectralImage

#largest R for which all permutations are searched
MAX_EXHAUSTIVE_R = 8
#floor of normalized spectra before the logarithm of the SID
SID_FLOOR = 1e-12
#header of metric outputs
METRIC_NOTES = {
    "aligned": True,
    "alignment": "permutation minimizing total SAD, applied to endmembers and abundance rows",
    "msad_unit": "rad",
    "msid_log": "natural",
    "psnr_max": "max entry of the reconstruction",
}


def _values(x) -> np.ndarray:
    if isinstance(x, (HyperspectralImage, AbundanceMatrix, EndmemberMatrix)):
        return x.data
    return np.asarray(x, dtype=np.float64)


def _same_shape(a : np.ndarray, b : np.ndarray, what : str):
    if a.shape != b.shape:
        raise DimensionError(f"{what}: shapes {a.shape} and {b.shape} differ.")


def sad_matrix(S_true, S_est) -> np.ndarray:
    """Spectral angles between every pair of columns.

    Args:
        S_true (EndmemberMatrix | np.ndarray): B x R reference spectra.
        S_est (EndmemberMatrix | np.ndarray): B x R' estimated spectra.

    Raises:
        ConstraintError: If a column has zero norm.

    Returns:
        np.ndarray: R x R' matrix of angles in radians.
    """
    S, T = _values(S_true), _values(S_est)
    norms_s = np.linalg.norm(S, axis=0)
    norms_t = np.linalg.norm(T, axis=0)
    if np.any(norms_s == 0) or np.any(norms_t == 0):
        raise ConstraintError("Spectral angle undefined for a zero-norm endmember.")
    cos = (S.T @ T)/np.outer(norms_s, norms_t)
    return np.arccos(np.clip(cos, -1.0, 1.0))


def align_endmembers(S_true, S_est) -> tuple[int, ...]:
    """Find the column order of S_est matching S_true.
        Exhaustive search for R <= 8, Hungarian assignment otherwise.

    Returns:
        tuple[int, ...]: permutation p such that S_est[:, p] is aligned with S_true.
    """
    S, T = _values(S_true), _values(S_est)
    _same_shape(S, T, "align_endmembers")
    cost = sad_matrix(S, T)
    R = cost.shape[0]
    if R > MAX_EXHAUSTIVE_R:
        _, cols = linear_sum_assignment(cost)
        return tuple(int(c) for c in cols)

    rows = np.arange(R)
    best, best_cost = None, np.inf
    for p in permutations(range(R)):
        c = cost[rows, p].sum()
        if c < best_cost:
            best, best_cost = p, c
    return tuple(best)


def rmse(A_true, A_est, permutation=None) -> float:
    """Root mean squared abundance error, sqrt(1/(N R) sum_i ||a_i - a^_i||^2).

    Args:
        A_true (AbundanceMatrix): Reference abundances.
        A_est (AbundanceMatrix): Estimated abundances.
        permutation (sequence[int], optional): Row order applied to A_est first.

    Raises:
        DimensionError: If the shapes differ.
    """
    A, B = _values(A_true), _values(A_est)
    _same_shape(A, B, "rmse")
    if permutation is not None:
        B = B[list(permutation)]
    return float(np.sqrt(np.mean((A-B)**2)))


def msad(S_true, S_est, permutation=None) -> float:
    """Mean spectral angle distance in radians, after endmember alignment.

    Args:
        S_true (EndmemberMatrix): Reference endmembers.
        S_est (EndmemberMatrix): Estimated endmembers.
        permutation (sequence[int], optional): Column order of S_est. Searched if omitted.
    """
    S, T = _values(S_true), _values(S_est)
    _same_shape(S, T, "msad")
    if permutation is None:
        permutation = align_endmembers(S, T)
    return float(np.mean(np.diag(sad_matrix(S, T[:, list(permutation)]))))


def msid(S_true, S_est, permutation=None) -> float:
    """Mean spectral information divergence (natural logarithm), after endmember alignment.
        sum_b p_b log(p_b/p^_b), p = s/1's, normalized spectra floored at 1e-12.

    Raises:
        ConstraintError: If a column sums to zero.
    """
    S, T = _values(S_true), _values(S_est)
    _same_shape(S, T, "msid")
    if permutation is None:
        permutation = align_endmembers(S, T)
    T = T[:, list(permutation)]

    sums_s, sums_t = S.sum(axis=0), T.sum(axis=0)
    if np.any(sums_s == 0) or np.any(sums_t == 0):
        raise ConstraintError("Spectral information divergence undefined for a column summing to 0.")
    P = np.maximum(S/sums_s, SID_FLOOR)
    Q = np.maximum(T/sums_t, SID_FLOOR)
    return float(np.mean(np.sum(P*np.log(P/Q), axis=0)))


def psnr(Y_ref, Y_rec) -> float:
    """Peak signal-to-noise ratio, 10 log10(MAX^2/MSE), MAX = max entry of Y_rec.

    Returns:
        float: PSNR in dB, inf if the images are identical.
    """
    Y, Z = _values(Y_ref), _values(Y_rec)
    _same_shape(Y, Z, "psnr")
    mse = np.mean((Y-Z)**2)
    if mse == 0:
        return float("inf")
    return float(10*np.log10(np.max(Z)**2/mse))


def snr_db(Y_clean, Y_noisy) -> float:
    """Realized signal-to-noise ratio 10 log10(sum Y^2 / sum E^2) in dB.
    """
    Y, Z = _values(Y_clean), _values(Y_noisy)
    _same_shape(Y, Z, "snr_db")
    noise = np.sum((Z-Y)**2)
    if noise == 0:
        return float("inf")
    return float(10*np.log10(np.sum(Y**2)/noise))


@dataclass(frozen=True)
class ReferenceData:
    """What is known about the truth of a scene.
        Synthetic scenes know everything, real scenes only the observation.
    """
    Y_ref : HyperspectralImage
    A_true : Optional[AbundanceMatrix] = None
    S_true : Optional[EndmemberMatrix] = None

    @property
    def has_ground_truth(self) -> bool:
        return self.A_true is not None and self.S_true is not None


def evaluate(reference : ReferenceData, A_est, S_est) -> dict[str, float]:
    """Compute all metrics available for a reference.

    Args:
        reference (ReferenceData): Reference data.
        A_est (AbundanceMatrix | np.ndarray): Estimated abundances.
        S_est (EndmemberMatrix | np.ndarray): Estimated endmembers.

    Returns:
        dict[str, float]: psnr, and rmse/msad/msid if the ground truth is known.
    """
    A, S = _values(A_est), _values(S_est)
    metrics = {}
    if reference.has_ground_truth:
        p = align_endmembers(reference.S_true, S)
        metrics["rmse"] = rmse(reference.A_true, A, p)
        metrics["msad"] = msad(reference.S_true, S, p)
        metrics["msid"] = msid(reference.S_true, S, p)
    metrics["psnr"] = psnr(reference.Y_ref, S @ A)
    return metrics
