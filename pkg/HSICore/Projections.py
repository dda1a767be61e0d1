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

from HSICore.Errors import ConstraintError, DimensionError
from HSICore.Images import AbundanceMatrix


def simplex_project(M : np.ndarray) -> np.ndarray:
    """Project every column of M onto the unit simplex.
        Sort-based algorithm: the projection is max(m - theta, 0) where theta
        is found from the cumulative sums of the sorted column.

    Args:
        M (np.ndarray): R x N matrix.

    Raises:
        ConstraintError: If M contains non-finite values.

    Returns:
        np.ndarray: R x N matrix with columns on the simplex.
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise DimensionError(f"Expected a 2-D matrix, got {M.ndim} dimension(s).")
    if not np.all(np.isfinite(M)):
        raise ConstraintError("Cannot project non-finite values onto the simplex.")

    R, N = M.shape
    U = -np.sort(-M, axis=0)
    cssv = np.cumsum(U, axis=0) - 1
    ind = np.arange(1, R+1)[:, np.newaxis]
    cond = U - cssv/ind > 0
    #number of active coordinates per column
    rho = np.count_nonzero(cond, axis=0)
    theta = cssv[rho-1, np.arange(N)]/rho
    return np.maximum(M - theta[np.newaxis, :], 0)


def project_simplex_columns(M, height : int | None = None, width : int | None = None) -> AbundanceMatrix:
    """Project the columns of M onto the unit simplex.

    Args:
        M (array_like): R x N matrix.
        height (int, optional): Grid height of the result.
        width (int, optional): Grid width of the result.

    Returns:
        AbundanceMatrix: Projected abundances.
    """
    return AbundanceMatrix(simplex_project(M), height, width)
