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

from HSICore.Errors import DimensionError
from HSICore.Images import AbundanceMatrix, EndmemberMatrix, HyperspectralImage


def mix_pixels(S, A):
    """Mix endmembers with abundances, Y = S A.
        Works on numpy arrays and torch tensors alike, it is the single
        code path used by lmm_mix and by the autoencoder's decoder.

    Args:
        S (array): B x R endmember matrix.
        A (array): R x N abundance matrix.

    Raises:
        DimensionError: If the inner dimensions differ.

    Returns:
        array: B x N mixed pixels.
    """
    if S.shape[-1] != A.shape[0]:
        raise DimensionError(f"Cannot mix {S.shape[-1]} endmembers with {A.shape[0]} abundance rows.")
    return S @ A


def lmm_mix(S : EndmemberMatrix, A : AbundanceMatrix) -> HyperspectralImage:
    """Linear mixing model.

    Args:
        S (EndmemberMatrix): Endmembers.
        A (AbundanceMatrix): Abundances, its grid defines the image grid.

    Returns:
        HyperspectralImage: S A on the abundance grid.
    """
    height, width = A.grid
    return HyperspectralImage(mix_pixels(S.data, A.data), height, width)
