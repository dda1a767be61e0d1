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

from Denoisers.Denoisers import DenoiserSpec, denoise


def red_value(A, grid : tuple[int, int], spec : DenoiserSpec, n_jobs : int = 1) -> float:
    """RED functional 1/2 <A, A - C(A)> (Frobenius inner product).
    """
    A = np.asarray(getattr(A, "data", A), dtype=np.float64)
    return float(0.5*np.sum(A*(A - denoise(A, grid, spec, n_jobs))))


def red_gradient(A, grid : tuple[int, int], spec : DenoiserSpec, n_jobs : int = 1) -> np.ndarray:
    """Gradient of the RED functional, the denoising residual A - C(A).
    """
    A = np.asarray(getattr(A, "data", A), dtype=np.float64)
    return A - denoise(A, grid, spec, n_jobs)
