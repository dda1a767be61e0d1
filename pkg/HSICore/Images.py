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

#tolerance of the abundance sum-to-one constraint
ASC_TOLERANCE = 1e-9


def _as_matrix(data, name : str) -> np.ndarray:
    M = np.array(data, dtype=np.float64, copy=True)
    if M.ndim != 2:
        raise DimensionError(f"{name} must be a 2-D matrix, got {M.ndim} dimension(s).")
    if not np.all(np.isfinite(M)):
        raise ConstraintError(f"{name} contains non-finite entries.")
    M.setflags(write=False)
    return M


class HyperspectralImage:
    """An observed (or reconstructed) hyperspectral image.
        The pixels are the columns of a B x N matrix,
        pixel n sits at grid position (n // width, n % width).
    """
    def __init__(self, data, height : int, width : int) -> None:
        """Setup an image.

        Args:
            data (array_like): B x N reflectance matrix.
            height (int): Number of pixel rows H.
            width (int): Number of pixel columns W.

        Raises:
            DimensionError: If N != H*W.
            ConstraintError: If the data contains non-finite values.
        """
        self._data = _as_matrix(data, "HyperspectralImage")
        if height < 1 or width < 1 or self._data.shape[1] != height*width:
            raise DimensionError(f"Image with {self._data.shape[1]} pixels does not fit a {height}x{width} grid.")
        self._height = int(height)
        self._width = int(width)

    @property
    def data(self) -> np.ndarray:
        """Get the B x N matrix (read-only view).
        """
        return self._data

    @property
    def height(self) -> int:
        return self._height

    @property
    def width(self) -> int:
        return self._width

    @property
    def grid(self) -> tuple[int, int]:
        """Get the spatial shape (H, W).
        """
        return (self._height, self._width)

    @property
    def bands(self) -> int:
        return self._data.shape[0]

    @property
    def n_pixels(self) -> int:
        return self._data.shape[1]

    def cube(self) -> np.ndarray:
        """Get the image as a B x H x W cube.
        """
        return self._data.reshape(self.bands, self._height, self._width)

    def __repr__(self) -> str:
        return f"HyperspectralImage(bands={self.bands}, height={self._height}, width={self._width})"


class AbundanceMatrix:
    """Fractional abundances, one column per pixel, every column on the unit simplex.
    """
    def __init__(self, data, height : int | None = None, width : int | None = None, check : bool = True) -> None:
        """Setup an abundance matrix.

        Args:
            data (array_like): R x N matrix.
            height (int, optional): Grid height. Defaults to a 1 x N grid.
            width (int, optional): Grid width. Defaults to N.
            check (bool, optional): Validate ANC and ASC. Defaults to True.

        Raises:
            ConstraintError: If an entry is negative or a column does not sum to one.
            DimensionError: If the grid does not fit N.
        """
        self._data = _as_matrix(data, "AbundanceMatrix")
        n = self._data.shape[1]
        if height is None and width is None:
            height, width = 1, n
        elif height is None or width is None or height*width != n:
            raise DimensionError(f"Abundances with {n} pixels do not fit a {height}x{width} grid.")
        self._height = int(height)
        self._width = int(width)

        if check:
            if np.any(self._data < 0):
                raise ConstraintError(f"Abundances violate ANC (min entry {self._data.min()}).")
            col_sums = self._data.sum(axis=0)
            if np.any(np.abs(col_sums-1) > ASC_TOLERANCE):
                raise ConstraintError(f"Abundances violate ASC (max deviation {np.abs(col_sums-1).max()}).")

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def n_endmembers(self) -> int:
        return self._data.shape[0]

    @property
    def n_pixels(self) -> int:
        return self._data.shape[1]

    @property
    def grid(self) -> tuple[int, int]:
        return (self._height, self._width)

    def maps(self) -> np.ndarray:
        """Get the abundances as R x H x W maps.
        """
        return self._data.reshape(self.n_endmembers, self._height, self._width)

    def permuted(self, permutation) -> AbundanceMatrix:
        """Reorder the abundance rows.

        Args:
            permutation (sequence[int]): New row order.

        Returns:
            AbundanceMatrix: Abundances with rows [permutation].
        """
        return AbundanceMatrix(self._data[list(permutation)], self._height, self._width, check=False)

    def __repr__(self) -> str:
        return f"AbundanceMatrix(R={self.n_endmembers}, grid={self.grid})"


class EndmemberMatrix:
    """Endmember spectra, one column per material, elementwise nonnegative.
    """
    def __init__(self, data, check : bool = True) -> None:
        """Setup an endmember matrix.

        Args:
            data (array_like): B x R matrix.
            check (bool, optional): Validate ENC and non-zero columns. Defaults to True.

        Raises:
            ConstraintError: If an entry is negative or a column is all zero.
        """
        self._data = _as_matrix(data, "EndmemberMatrix")
        if check:
            if np.any(self._data < 0):
                raise ConstraintError(f"Endmembers violate ENC (min entry {self._data.min()}).")
            if np.any(np.all(self._data == 0, axis=0)):
                raise ConstraintError("Endmember matrix has an all-zero column.")

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def bands(self) -> int:
        return self._data.shape[0]

    @property
    def n_endmembers(self) -> int:
        return self._data.shape[1]

    def permuted(self, permutation) -> EndmemberMatrix:
        """Reorder the endmember columns.
        """
        return EndmemberMatrix(self._data[:, list(permutation)], check=False)

    def __repr__(self) -> str:
        return f"EndmemberMatrix(B={self.bands}, R={self.n_endmembers})"
