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


class UnmixingError(Exception):
    """Base class of all errors raised by the unmixing package.
    """


class DimensionError(UnmixingError, ValueError):
    """Shapes of matrices, grids or parameter blocks do not match.
    """


class ConstraintError(UnmixingError, ValueError):
    """A typed input violates ASC, ANC, ENC or contains non-finite values.
    """


class ConfigError(UnmixingError, ValueError):
    """Invalid configuration.

    Args:
        field (str): Name of the offending configuration field.
        message (str): Description of the problem.
    """
    def __init__(self, field : str, message : str) -> None:
        super().__init__(f"{field}: {message}")
        self.field = field


class LibraryParseError(UnmixingError, ValueError):
    """A spectral library file could not be parsed.
    """
    def __init__(self, path, line : int, message : str) -> None:
        super().__init__(f"{path}, line {line}: {message}")
        self.path = path
        self.line = line


class EndmemberSeparationError(UnmixingError, RuntimeError):
    """Procedural endmembers could not be separated by the requested angle.
    """


class NonFiniteGradientError(UnmixingError, RuntimeError):
    """An optimizer step received a non-finite gradient.
    """
    def __init__(self, block : str) -> None:
        super().__init__(f"Non-finite gradient in parameter block '{block}'.")
        self.block = block


class TrainingDivergenceError(UnmixingError, RuntimeError):
    """The autoencoder loss became non-finite.
    """
    def __init__(self, epoch : int, loss : float) -> None:
        super().__init__(f"Autoencoder loss became {loss} at epoch {epoch}.")
        self.epoch = epoch
        self.loss = loss


class FixedPointError(UnmixingError, RuntimeError):
    """The abundance fixed-point iteration produced a non-finite iterate.
    """
    def __init__(self, inner_index : int) -> None:
        super().__init__(f"Non-finite abundance iterate at inner iteration {inner_index}.")
        self.inner_index = inner_index


class AdmmDivergenceError(UnmixingError, RuntimeError):
    """The ADMM loop failed. The history up to the failure is attached.
    """
    def __init__(self, iteration : int, history : list[dict], cause : Exception | None = None) -> None:
        reason = f": {cause}" if cause is not None else ""
        super().__init__(f"ADMM failed at iteration {iteration}{reason}")
        self.iteration = iteration
        self.history = history


class FCLSDivergenceError(UnmixingError, RuntimeError):
    """The projected-gradient FCLS solver increased its objective repeatedly.
    """
