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
from typing import Optional

from HSICore.Images import AbundanceMatrix, EndmemberMatrix, HyperspectralImage
from HSICore.Metrics import ReferenceData
from ADMM.AE_RED import AdmmConfig, AdmmState, run_ae_red
from Denoisers.Denoisers import DenoiserSpec


def plain_ae_config(config : AdmmConfig) -> AdmmConfig:
    """Equal-budget ablation of a run: lambda = 0, one ADMM iteration of K*epochs epochs.
    """
    return config.model_copy(update={
        "lam": 0.0,
        "K": 1,
        "epochs": config.K*config.epochs,
        "denoiser": DenoiserSpec(kind="identity"),
        "overlap_denoiser": False,
    })


def plain_ae(Y : HyperspectralImage, config : AdmmConfig, R : int, reference : Optional[ReferenceData] = None,
             checkpoint_dir : str | Path | None = None, show_progress : bool = False, with_state : bool = False
             ) -> tuple[AbundanceMatrix, EndmemberMatrix] | tuple[AbundanceMatrix, EndmemberMatrix, AdmmState]:
    """Unmix with the autoencoder alone.

    Args:
        Y (HyperspectralImage): Image.
        config (AdmmConfig): Configuration of the AE-RED run to compare with.
        R (int): Number of endmembers.
        reference (ReferenceData, optional): Ground truth for the history.
        checkpoint_dir (str | Path, optional): Directory of parameter checkpoints.
        show_progress (bool, optional): Show progress bars. Defaults to False.
        with_state (bool, optional): Also return the final ADMM state. Defaults to False.

    Returns:
        tuple: Encoder abundances and decoder endmembers (and the state).
    """
    A_hat, S_hat, state = run_ae_red(Y, plain_ae_config(config), R, reference=reference,
                                    checkpoint_dir=checkpoint_dir, show_progress=show_progress)
    if with_state:
        return A_hat, S_hat, state
    return A_hat, S_hat
