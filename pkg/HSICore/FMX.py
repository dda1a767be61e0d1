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

#   A JSON header line followed by rows*cols little-endian float64 values in column-major order.
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from HSICore.Errors import DimensionError, UnmixingError

import logging
logger = logging.getLogger(__name__)

FMX_ORDER = "col-major"
FMX_DTYPE = "f64"


class FMXFormatError(UnmixingError, ValueError):
    """A file is not a valid fmx file.
    """


def write_fmx(path : str | Path, M) -> Path:
    """Write a matrix to an fmx file.

    Args:
        path (str | Path): Target file.
        M (array_like): 2-D matrix.

    Returns:
        Path: The written file.
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise DimensionError(f"fmx stores 2-D matrices, got {M.ndim} dimension(s).")
    header = json.dumps({"rows": M.shape[0], "cols": M.shape[1], "order": FMX_ORDER, "dtype": FMX_DTYPE},
                        separators=(",", ":"))
    path = Path(path)
    with open(path, "wb") as f:
        f.write(header.encode("ascii") + b"\n")
        f.write(M.astype("<f8").tobytes(order="F"))
    logger.debug(f"Wrote {M.shape[0]}x{M.shape[1]} matrix to {path}.")
    return path


def read_fmx(path : str | Path) -> np.ndarray:
    """Read a matrix from an fmx file.

    Args:
        path (str | Path): Source file.

    Raises:
        FMXFormatError: If the header is malformed or the payload has the wrong size.

    Returns:
        np.ndarray: rows x cols float64 matrix.
    """
    path = Path(path)
    with open(path, "rb") as f:
        raw = f.read()
    newline = raw.find(b"\n")
    if newline < 0:
        raise FMXFormatError(f"{path}: missing header line.")
    try:
        header = json.loads(raw[:newline].decode("ascii"))
        rows, cols = int(header["rows"]), int(header["cols"])
    except (ValueError, KeyError, TypeError) as e:
        raise FMXFormatError(f"{path}: malformed header ({e}).") from e
    if header.get("order") != FMX_ORDER or header.get("dtype") != FMX_DTYPE:
        raise FMXFormatError(f"{path}: unsupported order/dtype {header.get('order')}/{header.get('dtype')}.")

    payload = raw[newline+1:]
    if len(payload) != 8*rows*cols:
        raise FMXFormatError(f"{path}: expected {8*rows*cols} payload bytes, found {len(payload)}.")
    values = np.frombuffer(payload, dtype="<f8")
    return values.reshape((rows, cols), order="F").astype(np.float64)
