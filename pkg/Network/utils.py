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
from pathlib import Path

import numpy as np
import torch

from HSICore.Errors import DimensionError
from HSICore.FMX import read_fmx, write_fmx
from Network.AutoEncoder import AutoEncoder
from Network.Encoder import EncoderSpec

import logging
logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"


def save_checkpoint(params : AutoEncoder, path : str | Path, step : int = 0) -> Path:
    """Store the parameters as a directory of fmx files plus a JSON manifest.
        Every block is flattened to (first dimension) x (rest); the manifest keeps the shapes.

    Args:
        params (AutoEncoder): Parameters to store.
        path (str | Path): Checkpoint directory.
        step (int, optional): Optimizer step counter. Defaults to 0.

    Returns:
        Path: The checkpoint directory.
    """
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)

    blocks = {}
    for i, (name, tensor) in enumerate(params.state_dict().items()):
        values = tensor.detach().numpy()
        file_name = f"{i:02d}_{name}.fmx"
        write_fmx(path/file_name, values.reshape(values.shape[0], -1))
        blocks[name] = {"file": file_name, "shape": list(values.shape)}

    manifest = {
        "spec": params.spec.model_dump(mode="json"),
        "step": step,
        "blocks": blocks,
    }
    with open(path/MANIFEST, "w") as f:
        json.dump(manifest, f, indent=2)
        f.write("\n")
    logger.debug(f"Saved checkpoint at step {step} to {path}.")
    return path


def load_checkpoint(path : str | Path) -> tuple[AutoEncoder, int]:
    """Load parameters stored by save_checkpoint.

    Args:
        path (str | Path): Checkpoint directory.

    Raises:
        DimensionError: If a stored block does not fit the architecture.

    Returns:
        tuple[AutoEncoder, int]: Parameters and the stored step counter.
    """
    path = Path(path)
    with open(path/MANIFEST) as f:
        manifest = json.load(f)

    model = AutoEncoder(EncoderSpec.model_validate(manifest["spec"]))
    expected = model.state_dict()
    state = {}
    for name, block in manifest["blocks"].items():
        values = read_fmx(path/block["file"]).reshape(block["shape"])
        if name not in expected or tuple(expected[name].shape) != values.shape:
            raise DimensionError(f"Checkpoint block '{name}' with shape {values.shape} does not fit the architecture.")
        state[name] = torch.from_numpy(np.ascontiguousarray(values))
    model.load_state_dict(state)
    return model, int(manifest["step"])
