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
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from HSICore.Errors import ConfigError, DimensionError
from HSICore.FMX import read_fmx, write_fmx
from HSICore.Images import AbundanceMatrix, EndmemberMatrix, HyperspectralImage
from HSICore.Metrics import ReferenceData, snr_db
from HSICore.Mixing import lmm_mix
from SynthGen.Generators import add_noise, gaussian_field_abundances, load_endmembers_csv, procedural_endmembers
from SynthGen.SceneConfig import CSVSource, SceneConfig

import logging
logger = logging.getLogger(__name__)

SCENE_FILES = ("Y_clean.fmx", "Y_noisy.fmx", "A_true.fmx", "S_true.fmx")


@dataclass(frozen=True)
class SyntheticScene:
    """A generated scene: Y_clean = S_true A_true exactly, Y_noisy = Y_clean + noise.
    """
    Y_clean : HyperspectralImage
    Y_noisy : HyperspectralImage
    A_true : AbundanceMatrix
    S_true : EndmemberMatrix
    config : SceneConfig
    realized_snr_db : float

    def reference(self) -> ReferenceData:
        return ReferenceData(Y_ref=self.Y_clean, A_true=self.A_true, S_true=self.S_true)


def component_seeds(seed : int) -> tuple[int, int, int]:
    """Derive independent seeds for the abundances, the endmembers and the noise.
    """
    children = np.random.SeedSequence(seed).spawn(3)
    return tuple(int(c.generate_state(1, dtype=np.uint64)[0]) for c in children)


def make_scene(config : SceneConfig) -> SyntheticScene:
    """Generate a synthetic scene following the configuration.

    Args:
        config (SceneConfig): Scene parameters.

    Raises:
        ConfigError: If a library's band count differs from config.B.

    Returns:
        SyntheticScene: The scene.
    """
    seed_A, seed_S, seed_E = component_seeds(config.seed)
    logger.info(f"Generating scene {config.height}x{config.width}, R={config.R}, B={config.B}, seed {config.seed}.")

    A = gaussian_field_abundances(config.height, config.width, config.R, config.correlation_length, seed_A)

    source = config.endmember_source
    if isinstance(source, CSVSource):
        S = load_endmembers_csv(source.path, config.R, source.selection_seed)
        if S.bands != config.B:
            raise ConfigError("B", f"library {source.path} has {S.bands} bands, config asks for {config.B}")
    else:
        S = procedural_endmembers(config.B, config.R, seed_S)

    Y_clean = lmm_mix(S, A)
    Y_noisy = add_noise(Y_clean, config.snr_db, seed_E)
    realized = snr_db(Y_clean, Y_noisy)
    logger.info(f"Realized SNR {realized} dB (target {config.snr_db}).")

    return SyntheticScene(Y_clean=Y_clean, Y_noisy=Y_noisy, A_true=A, S_true=S, config=config, realized_snr_db=realized)


def save_scene(scene : SyntheticScene, out_dir : str | Path) -> Path:
    """Write a scene directory: scene.json plus the four fmx members.

    Args:
        scene (SyntheticScene): Scene to store.
        out_dir (str | Path): Target directory, created if missing.

    Returns:
        Path: The scene directory.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    write_fmx(out_dir/"Y_clean.fmx", scene.Y_clean.data)
    write_fmx(out_dir/"Y_noisy.fmx", scene.Y_noisy.data)
    write_fmx(out_dir/"A_true.fmx", scene.A_true.data)
    write_fmx(out_dir/"S_true.fmx", scene.S_true.data)

    realized = scene.realized_snr_db
    description = {
        "config": scene.config.model_dump(mode="json"),
        "height": scene.config.height,
        "width": scene.config.width,
        "realized_snr_db": None if np.isinf(realized) else realized,
        "noise_power": "mean(Y_clean^2)/10^(snr_db/10)",
    }
    with open(out_dir/"scene.json", "w") as f:
        json.dump(description, f, indent=2, sort_keys=True)
        f.write("\n")

    logger.info(f"Saved scene to {out_dir}.")
    return out_dir


@dataclass(frozen=True)
class SceneData:
    """A scene read from disk. Real scenes carry only the observation.
    """
    Y : HyperspectralImage
    Y_clean : Optional[HyperspectralImage] = None
    A_true : Optional[AbundanceMatrix] = None
    S_true : Optional[EndmemberMatrix] = None

    @property
    def has_ground_truth(self) -> bool:
        return self.A_true is not None and self.S_true is not None

    def reference(self) -> ReferenceData:
        """Reference of the metrics. Without a clean image, the observation is the reference.
        """
        Y_ref = self.Y_clean if self.Y_clean is not None else self.Y
        return ReferenceData(Y_ref=Y_ref, A_true=self.A_true, S_true=self.S_true)


def load_scene_dir(scene_dir : str | Path) -> SceneData:
    """Read a scene directory.
        Y_noisy.fmx and scene.json (height, width) are required, the ground truth is optional.

    Args:
        scene_dir (str | Path): Scene directory.

    Raises:
        ConfigError: If scene.json lacks the grid.
        DimensionError: If the members do not fit together.

    Returns:
        SceneData: The scene.
    """
    scene_dir = Path(scene_dir)
    with open(scene_dir/"scene.json") as f:
        description = json.load(f)
    try:
        height, width = int(description["height"]), int(description["width"])
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError("height/width", f"{scene_dir/'scene.json'} does not define the grid") from e

    Y = HyperspectralImage(read_fmx(scene_dir/"Y_noisy.fmx"), height, width)

    Y_clean = A_true = S_true = None
    if (scene_dir/"Y_clean.fmx").exists():
        Y_clean = HyperspectralImage(read_fmx(scene_dir/"Y_clean.fmx"), height, width)
    if (scene_dir/"A_true.fmx").exists() and (scene_dir/"S_true.fmx").exists():
        A_true = AbundanceMatrix(read_fmx(scene_dir/"A_true.fmx"), height, width)
        S_true = EndmemberMatrix(read_fmx(scene_dir/"S_true.fmx"))
        if S_true.bands != Y.bands or S_true.n_endmembers != A_true.n_endmembers:
            raise DimensionError(f"Ground truth of {scene_dir} does not fit the observation.")

    logger.info(f"Loaded scene {scene_dir} ({Y}, ground truth: {A_true is not None}).")
    return SceneData(Y=Y, Y_clean=Y_clean, A_true=A_true, S_true=S_true)
