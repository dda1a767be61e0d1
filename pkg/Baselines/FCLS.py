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

from typing import Optional

import numpy as np
from tqdm.auto import tqdm

from HSICore.Errors import ConstraintError, DimensionError, FCLSDivergenceError
from HSICore.Images import AbundanceMatrix, EndmemberMatrix, HyperspectralImage
from HSICore.Projections import simplex_project

import logging
logger = logging.getLogger(__name__)

POWER_ITERATIONS = 50
DIVERGENCE_PATIENCE = 10
#relative slack of the increase test
INCREASE_TOLERANCE = 1e-12


def largest_eigenvalue(M : np.ndarray, iterations : int = POWER_ITERATIONS) -> float:
    """Largest eigenvalue of a symmetric positive semi-definite matrix by power iteration.
    """
    v = np.ones(M.shape[0])/np.sqrt(M.shape[0])
    value = 0.0
    for _ in range(iterations):
        w = M @ v
        norm = np.linalg.norm(w)
        if norm == 0:
            return 0.0
        v = w/norm
        value = float(v @ M @ v)
    return value


def fcls_objective(Y : np.ndarray, S : np.ndarray, A : np.ndarray) -> float:
    return 0.5*float(np.sum((Y - S @ A)**2))


def fcls(Y : HyperspectralImage, S : EndmemberMatrix, iters : int = 5000, step : Optional[float] = None,
         show_progress : bool = False) -> AbundanceMatrix:
    """Abundances minimizing 1/2 ||Y - S A||_F^2 on the simplex, for fixed endmembers.
        Starts from uniform abundances 1/R, every gradient step is followed by the
        column-wise simplex projection.

    Args:
        Y (HyperspectralImage): Image.
        S (EndmemberMatrix): Known endmembers.
        iters (int, optional): Number of iterations, >= 1. Defaults to 5000.
        step (float, optional): Step size. Defaults to 1/L, L the largest eigenvalue of S'S.
        show_progress (bool, optional): Show a progress bar. Defaults to False.

    Raises:
        DimensionError: If the band counts differ.
        FCLSDivergenceError: If the objective increases over 10 consecutive steps.

    Returns:
        AbundanceMatrix: Estimated abundances.
    """
    if iters < 1:
        raise ConstraintError(f"iters must be >= 1, got {iters}.")
    Yd, Sd = Y.data, S.data
    if Sd.shape[0] != Yd.shape[0]:
        raise DimensionError(f"Endmembers have {Sd.shape[0]} bands, image has {Yd.shape[0]}.")

    StS = Sd.T @ Sd
    StY = Sd.T @ Yd
    if step is None:
        L = largest_eigenvalue(StS)
        if L <= 0:
            raise ConstraintError("Endmember matrix has no positive eigenvalue.")
        step = 1.0/L
    logger.debug(f"FCLS with step {step}, {iters} iterations.")

    R = Sd.shape[1]
    A = np.full((R, Yd.shape[1]), 1.0/R)
    previous = fcls_objective(Yd, Sd, A)
    increases = 0
    for i in tqdm(range(iters), desc="FCLS", disable=not show_progress):
        A = simplex_project(A - step*(StS @ A - StY))
        current = fcls_objective(Yd, Sd, A)
        if current > previous*(1 + INCREASE_TOLERANCE) + INCREASE_TOLERANCE:
            increases += 1
            if increases >= DIVERGENCE_PATIENCE:
                raise FCLSDivergenceError(f"FCLS objective increased over {DIVERGENCE_PATIENCE} consecutive steps "
                                          f"(iteration {i}, step {step}); use a smaller step.")
        else:
            increases = 0
        previous = current

    return AbundanceMatrix(A, Y.height, Y.width)
