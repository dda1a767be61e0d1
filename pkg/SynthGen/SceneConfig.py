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

import json
import math
from pathlib import Path
from typing import Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from HSICore.Errors import ConfigError
from SynthGen.Generators import MIN_PROCEDURAL_BANDS


class ProceduralSource(BaseModel):
    """Endmembers generated from Gaussian bumps.
    """
    model_config = ConfigDict(extra="forbid")
    kind : Literal["procedural"] = "procedural"


class CSVSource(BaseModel):
    """Endmembers drawn from a CSV spectral library.
    """
    model_config = ConfigDict(extra="forbid")
    kind : Literal["csv"] = "csv"
    path : str
    selection_seed : int = 0


EndmemberSource = Union[ProceduralSource, CSVSource]


class SceneConfig(BaseModel):
    """Parameters of a synthetic scene.
        snr_db = None (or an infinite value) disables the noise.
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    height : int = Field(ge=1)
    width : int = Field(ge=1)
    R : int = Field(ge=1)
    B : int = Field(ge=1)
    correlation_length : float = Field(gt=0)
    snr_db : Optional[float] = None
    seed : int = Field(default=0, ge=0, lt=2**64)
    endmember_source : EndmemberSource = Field(default_factory=ProceduralSource, discriminator="kind")

    @field_validator("snr_db")
    @classmethod
    def _finite_snr(cls, v):
        if v is None:
            return None
        if math.isinf(v) and v > 0:
            return None
        if not math.isfinite(v):
            raise ValueError("snr_db must be finite (or null to disable the noise)")
        return v

    @model_validator(mode="after")
    def _procedural_bands(self):
        if isinstance(self.endmember_source, ProceduralSource) and self.B < MIN_PROCEDURAL_BANDS:
            raise ConfigError("B", f"procedural endmembers need at least {MIN_PROCEDURAL_BANDS} bands, got {self.B}")
        return self

    @property
    def noise_free(self) -> bool:
        return self.snr_db is None


def format_validation_error(error : ValidationError) -> ConfigError:
    """Turn a pydantic validation error into a ConfigError naming the first bad field.
    """
    first = error.errors()[0]
    cause = first.get("ctx", {}).get("error")
    if isinstance(cause, ConfigError):
        return cause
    field = ".".join(str(l) for l in first["loc"]) or "<root>"
    return ConfigError(field, first["msg"])


def load_scene_config(path : str | Path, seed : int | None = None) -> SceneConfig:
    """Load a scene configuration from a JSON file.

    Args:
        path (str | Path): JSON file.
        seed (int, optional): Overrides the seed of the file.

    Raises:
        ConfigError: If the file is not valid JSON or a field is invalid.

    Returns:
        SceneConfig: The configuration.
    """
    try:
        with open(path) as json_file:
            definition = json.load(json_file)
    except json.JSONDecodeError as e:
        raise ConfigError("<file>", f"{path} is not valid JSON ({e})") from e
    if not isinstance(definition, dict):
        raise ConfigError("<root>", "a scene configuration must be a JSON object")
    if seed is not None:
        definition["seed"] = seed
    try:
        return SceneConfig.model_validate(definition)
    except ValidationError as e:
        raise format_validation_error(e) from e
