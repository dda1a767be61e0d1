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

from pathlib import Path

import numpy as np
import pandas as pd
from scipy.ndimage import gaussian_filter
from scipy.special import softmax

from HSICore.Errors import ConstraintError, DimensionError, EndmemberSeparationError, LibraryParseError
from HSICore.Images import AbundanceMatrix, EndmemberMatrix, HyperspectralImage
from HSICore.Metrics import sad_matrix

import logging
logger = logging.getLogger(__name__)

#softmax temperature of the abundance fields
SOFTMAX_TEMPERATURE = 1.5
#gain applied to the standardized fields before the softmax
FIELD_GAIN = 3.0
#minimum pairwise spectral angle of procedural endmembers [rad]
MIN_ENDMEMBER_ANGLE = 0.15
MAX_ENDMEMBER_ATTEMPTS = 100
MIN_PROCEDURAL_BANDS = 4


def gaussian_field_abundances(height : int, width : int, R : int, correlation_length : float, seed : int) -> AbundanceMatrix:
    """Draw spatially smooth abundances.
        Every endmember gets a white Gaussian field smoothed by an isotropic Gaussian
        kernel (reflect padding), the fields are standardized and mapped pixelwise
        through a softmax across the endmembers.

    Args:
        height (int): Grid height.
        width (int): Grid width.
        R (int): Number of endmembers.
        correlation_length (float): Standard deviation of the smoothing kernel in pixels.
        seed (int): RNG seed.

    Returns:
        AbundanceMatrix: R x (height*width) abundances.
    """
    if height < 1 or width < 1 or R < 1:
        raise DimensionError(f"Invalid abundance grid {height}x{width} with R={R}.")
    if not correlation_length > 0:
        raise ConstraintError(f"correlation_length must be positive, got {correlation_length}.")

    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((R, height, width))

    fields = np.empty_like(noise)
    for r in range(R):
        field = gaussian_filter(noise[r], sigma=correlation_length, mode="reflect")
        std = field.std()
        field = field - field.mean()
        if std > 0:
            field = field/std
        fields[r] = field

    logits = FIELD_GAIN*fields.reshape(R, height*width)/SOFTMAX_TEMPERATURE
    A = softmax(logits, axis=0)
    return AbundanceMatrix(A, height, width)


def _bump_spectrum(rng : np.random.Generator, B : int) -> np.ndarray:
    bands = np.arange(B, dtype=np.float64)
    n_bumps = rng.integers(3, 7)
    spectrum = np.full(B, rng.uniform(0.05, 0.3))
    for _ in range(n_bumps):
        center = rng.uniform(0, B)
        width = rng.uniform(B/20, B/4)
        amplitude = rng.uniform(0.2, 1.0)
        spectrum += amplitude*np.exp(-0.5*((bands-center)/width)**2)
    return spectrum*rng.uniform(0.4, 1.0)/spectrum.max()


def procedural_endmembers(B : int, R : int, seed : int) -> EndmemberMatrix:
    """Generate endmember spectra from sums of Gaussian bumps.
        Each column holds 3-6 bumps plus a positive offset, scaled to a peak in [0.4, 1.0].
        The whole set is redrawn until all pairwise angles reach 0.15 rad.

    Args:
        B (int): Number of bands, at least 4.
        R (int): Number of endmembers.
        seed (int): RNG seed.

    Raises:
        EndmemberSeparationError: If no separated set was found in 100 attempts.

    Returns:
        EndmemberMatrix: B x R spectra.
    """
    if B < MIN_PROCEDURAL_BANDS or R < 1:
        raise DimensionError(f"Procedural endmembers need B >= {MIN_PROCEDURAL_BANDS} and R >= 1, got B={B}, R={R}.")

    rng = np.random.default_rng(seed)
    for attempt in range(MAX_ENDMEMBER_ATTEMPTS):
        S = np.stack([_bump_spectrum(rng, B) for _ in range(R)], axis=1)
        angles = sad_matrix(S, S)
        off_diagonal = angles[~np.eye(R, dtype=bool)]
        if off_diagonal.size == 0 or off_diagonal.min() >= MIN_ENDMEMBER_ANGLE:
            logger.debug(f"Procedural endmembers separated after {attempt+1} attempt(s).")
            return EndmemberMatrix(S)

    raise EndmemberSeparationError(f"Could not separate {R} procedural endmembers by {MIN_ENDMEMBER_ANGLE} rad "
                                   f"in {MAX_ENDMEMBER_ATTEMPTS} attempts, try a smaller R.")


def load_endmembers_csv(path : str | Path, R : int, selection_seed : int) -> EndmemberMatrix:
    """Draw endmembers from a CSV spectral library.
        The file has a header row of names followed by B numeric rows, one spectrum per column.

    Args:
        path (str | Path): CSV file.
        R (int): Number of endmembers to draw.
        selection_seed (int): Seed of the draw without replacement.

    Raises:
        LibraryParseError: On ragged rows, non-numeric or non-finite cells, a missing band table or too few columns.

    Returns:
        EndmemberMatrix: B x R spectra, negative readings clamped to 0.
    """
    try:
        table = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.ParserError as e:
        raise LibraryParseError(path, _line_of_parser_error(e), f"ragged row ({e})") from e
    except pd.errors.EmptyDataError as e:
        raise LibraryParseError(path, 1, "empty library file") from e

    if table.shape[0] == 0:
        raise LibraryParseError(path, 2, "no band rows")
    n_columns = table.shape[1]
    if n_columns < R:
        raise LibraryParseError(path, 1, f"library has {n_columns} spectra, {R} requested")

    values = np.empty(table.shape, dtype=np.float64)
    for i, row in enumerate(table.itertuples(index=False)):
        line = i+2
        for j, cell in enumerate(row):
            if pd.isna(cell) or cell == "":
                raise LibraryParseError(path, line, f"missing value in column '{table.columns[j]}' (ragged row)")
            try:
                values[i, j] = float(cell)
            except ValueError:
                raise LibraryParseError(path, line, f"non-numeric cell '{cell}' in column '{table.columns[j]}'")
            if not np.isfinite(values[i, j]):
                raise LibraryParseError(path, line, f"non-finite cell '{cell}' in column '{table.columns[j]}'")

    rng = np.random.default_rng(selection_seed)
    chosen = rng.choice(n_columns, size=R, replace=False)
    logger.info(f"Selected spectra {[table.columns[c] for c in chosen]} from {path}.")
    return EndmemberMatrix(np.maximum(values[:, chosen], 0))


def _line_of_parser_error(error : Exception) -> int:
    #pandas reports "... in line N, saw M"
    words = str(error).replace(",", " ").split()
    for a, b in zip(words, words[1:]):
        if a == "line" and b.isdigit():
            return int(b)
    return 0


def add_noise(Y : HyperspectralImage, snr_db : float | None, seed : int) -> HyperspectralImage:
    """Add zero-mean white Gaussian noise at a target SNR.
        The noise variance is mean(Y^2)/10^(snr_db/10).

    Args:
        Y (HyperspectralImage): Clean image.
        snr_db (float | None): Target SNR in dB, None or inf disables the noise.
        seed (int): RNG seed.

    Returns:
        HyperspectralImage: Noisy image.
    """
    if Y.n_pixels == 0 or Y.bands == 0:
        raise DimensionError("Cannot add noise to an empty image.")
    if snr_db is None or np.isposinf(snr_db):
        return HyperspectralImage(Y.data, Y.height, Y.width)

    sigma = np.sqrt(np.mean(Y.data**2)/10**(snr_db/10))
    rng = np.random.default_rng(seed)
    E = sigma*rng.standard_normal(Y.data.shape)
    return HyperspectralImage(Y.data + E, Y.height, Y.width)
