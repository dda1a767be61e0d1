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

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field
from tqdm.auto import tqdm

from HSICore.Errors import AdmmDivergenceError, ConstraintError, DimensionError, FixedPointError, UnmixingError
from HSICore.Images import AbundanceMatrix, EndmemberMatrix, HyperspectralImage
from HSICore.Metrics import ReferenceData, evaluate
from Denoisers.Denoisers import DenoiserSpec, denoise
from Denoisers.RED import red_value
from Network.AutoEncoder import AutoEncoder, encoder_forward, init_params
from Network.Encoder import EncoderSpec
from Network.Training import AdamState, train_ae
from Network.utils import save_checkpoint

import logging
logger = logging.getLogger(__name__)

#lambda = mu presets per noise level [dB]
SNR_PRESETS = {5.0: 0.5, 10.0: 0.5, 20.0: 0.1, 30.0: 0.01}


class AdmmConfig(BaseModel):
    """Parameters of an AE-RED run. The RED weight is the JSON key "lambda".
    """
    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    lam : float = Field(default=0.1, ge=0, alias="lambda")
    mu : float = Field(default=0.1, gt=0)
    K : int = Field(default=15, ge=1)
    J : int = Field(default=1, ge=1)
    epochs : int = Field(default=250, ge=1)
    lr : float = Field(default=1e-3, gt=0)
    lr_decoder : float = Field(default=1e-4, gt=0)
    seed : int = Field(default=0, ge=0)
    denoiser : DenoiserSpec = Field(default_factory=DenoiserSpec)
    hidden : tuple[int, int, int] = (64, 32, 16)
    negative_slope : float = Field(default=0.01, ge=0)
    overlap_denoiser : bool = False
    checkpoint_every : int = Field(default=0, ge=0)
    n_jobs : int = Field(default=1, ge=1)

    @classmethod
    def for_snr(cls, snr_db : float | None, **overrides) -> AdmmConfig:
        """Configuration with lambda = mu chosen by the noise level.
            0.5 at 5 and 10 dB, 0.1 at 20 dB, 0.01 at 30 dB and for noise-free data;
            other levels take the closest preset.
        """
        if snr_db is None or np.isinf(snr_db):
            weight = SNR_PRESETS[30.0]
        else:
            closest = min(SNR_PRESETS, key=lambda level : abs(level - snr_db))
            weight = SNR_PRESETS[closest]
        values = {"lam": weight, "mu": weight}
        values.update(overrides)
        return cls(**values)

    def encoder_spec(self, bands : int, n_endmembers : int) -> EncoderSpec:
        return EncoderSpec(bands=bands, n_endmembers=n_endmembers, hidden=self.hidden,
                           negative_slope=self.negative_slope)


@dataclass
class AdmmState:
    """Variables of the ADMM loop.
    """
    A : np.ndarray
    G : np.ndarray
    params : AutoEncoder
    optimizer : AdamState
    k : int = 0
    history : list[dict] = field(default_factory=list)

    def history_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.history)


def update_abundance(A, E_out, G, lam : float, mu : float, J : int, grid : tuple[int, int],
                     denoiser : DenoiserSpec, first_denoised : np.ndarray | None = None, n_jobs : int = 1) -> np.ndarray:
    """Fixed-point abundance update, J times A <- (lam C(A) + mu (E_out + G))/(lam + mu).

    Args:
        A (np.ndarray): R x N starting point.
        E_out (np.ndarray): R x N encoder output.
        G (np.ndarray): R x N dual variable.
        lam (float): RED weight, >= 0. With lam = 0 the denoiser is never called.
        mu (float): ADMM penalty, > 0.
        J (int): Number of inner iterations, >= 1.
        grid (tuple[int, int]): (H, W) of the abundance maps.
        denoiser (DenoiserSpec): Denoiser C.
        first_denoised (np.ndarray, optional): C(A) of the starting point, if already computed.
        n_jobs (int, optional): Channels denoised in parallel. Defaults to 1.

    Raises:
        FixedPointError: If an iterate becomes non-finite.

    Returns:
        np.ndarray: R x N updated abundances.
    """
    A = np.asarray(getattr(A, "data", A), dtype=np.float64)
    E_out = np.asarray(getattr(E_out, "data", E_out), dtype=np.float64)
    G = np.asarray(G, dtype=np.float64)
    if not (A.shape == E_out.shape == G.shape):
        raise DimensionError(f"Shapes of A {A.shape}, E {E_out.shape} and G {G.shape} differ.")
    if lam < 0 or not mu > 0 or J < 1:
        raise ConstraintError(f"Invalid fixed-point parameters lambda={lam}, mu={mu}, J={J}.")

    target = E_out + G
    if lam == 0:
        return target

    for j in range(J):
        if j == 0 and first_denoised is not None:
            C = first_denoised
        else:
            C = denoise(A, grid, denoiser, n_jobs)
        A = (lam*C + mu*target)/(lam + mu)
        if not np.all(np.isfinite(A)):
            raise FixedPointError(j)
    return A


def update_dual(G, A, E_out) -> np.ndarray:
    """Dual ascent G <- G - A + E_out.
    """
    G = np.asarray(G, dtype=np.float64)
    A = np.asarray(getattr(A, "data", A), dtype=np.float64)
    E_out = np.asarray(getattr(E_out, "data", E_out), dtype=np.float64)
    if not (A.shape == E_out.shape == G.shape):
        raise DimensionError(f"Shapes of G {G.shape}, A {A.shape} and E {E_out.shape} differ.")
    return G - A + E_out


def simplex_drift(A : np.ndarray) -> float:
    """Distance of the auxiliary abundances from the simplex, max |1'a - 1| + max(-a).
    """
    return float(np.max(np.abs(A.sum(axis=0)-1)) + max(0.0, -float(A.min())))


def _iteration_record(k : int, config : AdmmConfig, Y : HyperspectralImage, state : AdmmState,
                      E_out : AbundanceMatrix, losses : list[float], reference : ReferenceData | None) -> dict:
    S = state.params.endmembers.data
    recon = float(np.sum((Y.data - S @ E_out.data)**2))
    red = red_value(state.A, Y.grid, config.denoiser, config.n_jobs)
    record = {
        "k": k,
        "ae_loss": losses[-1],
        "recon_loss": recon,
        "red_value": red,
        "objective": recon + config.lam*red,
        "primal_residual": float(np.linalg.norm(state.A - E_out.data)),
        "simplex_drift": simplex_drift(state.A),
        "epochs_loss_first": losses[0],
        "epochs_loss_last": losses[-1],
    }
    if reference is not None and reference.has_ground_truth:
        record.update(evaluate(reference, E_out, S))
    return record


def run_ae_red(Y : HyperspectralImage, config : AdmmConfig, R : int, init : Optional[AutoEncoder] = None,
               reference : Optional[ReferenceData] = None, checkpoint_dir : str | Path | None = None,
               show_progress : bool = False) -> tuple[AbundanceMatrix, EndmemberMatrix, AdmmState]:
    """Unmix an image with AE-RED.
        A0 = E(Y) of the initial parameters, G0 = 0; then K times: train the autoencoder,
        update the abundances by the RED fixed point, update the dual variable.

    Args:
        Y (HyperspectralImage): Image, also the encoder input.
        config (AdmmConfig): Parameters.
        R (int): Number of endmembers.
        init (AutoEncoder, optional): Initial parameters, init_params is used if None.
        reference (ReferenceData, optional): Ground truth for per-iteration metrics.
        checkpoint_dir (str | Path, optional): Directory of parameter checkpoints.
        show_progress (bool, optional): Show progress bars. Defaults to False.

    Raises:
        AdmmDivergenceError: If training or the updates fail, carries the history so far.

    Returns:
        tuple[AbundanceMatrix, EndmemberMatrix, AdmmState]:
            - Encoder abundances (on the simplex).
            - Decoder endmembers.
            - Final state, the auxiliary abundances are state.A.
    """
    if not np.all(np.isfinite(Y.data)):
        raise ConstraintError("Image contains non-finite values.")

    if init is None:
        params = init_params(config.encoder_spec(Y.bands, R), Y, R, config.seed)
    else:
        if init.spec.bands != Y.bands or init.spec.n_endmembers != R:
            raise DimensionError(f"Initial parameters (B={init.spec.bands}, R={init.spec.n_endmembers}) do not fit B={Y.bands}, R={R}.")
        params = init

    optimizer = AdamState(params, lr=config.lr, lr_decoder=config.lr_decoder)
    E_out = encoder_forward(params, Y)
    state = AdmmState(A=E_out.data.copy(), G=np.zeros_like(E_out.data), params=params, optimizer=optimizer)

    logger.info(f"Running AE-RED: lambda={config.lam}, mu={config.mu}, K={config.K}, J={config.J}, "
                f"epochs={config.epochs}, denoiser={config.denoiser.kind}.")

    executor = ThreadPoolExecutor(max_workers=1) if config.overlap_denoiser and config.lam > 0 else None
    try:
        for k in tqdm(range(1, config.K+1), desc="ADMM", disable=not show_progress):
            try:
                #C(A^(k-1)) does not depend on the training, it may run alongside
                pending = None
                if executor is not None:
                    pending = executor.submit(denoise, state.A.copy(), Y.grid, config.denoiser, config.n_jobs)

                _, losses = train_ae(params, Y, state.A, state.G, config.mu, config.epochs, state=optimizer,
                                     seed=config.seed, show_progress=show_progress)
                E_out = encoder_forward(params, Y)

                first_denoised = pending.result() if pending is not None else None
                state.A = update_abundance(state.A, E_out.data, state.G, config.lam, config.mu, config.J,
                                           Y.grid, config.denoiser, first_denoised, config.n_jobs)
                state.G = update_dual(state.G, state.A, E_out.data)
                state.k = k

                record = _iteration_record(k, config, Y, state, E_out, losses, reference)
                if not all(np.isfinite(v) for key, v in record.items() if key != "psnr"):
                    raise ConstraintError(f"Non-finite ADMM state at iteration {k}: {record}")
                state.history.append(record)
            except UnmixingError as e:
                logger.error(f"AE-RED failed at iteration {k}: {e}")
                raise AdmmDivergenceError(k, list(state.history), e) from e

            logger.info(f"Iteration {k}: loss {record['ae_loss']:.6g}, RED {record['red_value']:.6g}, "
                        f"primal residual {record['primal_residual']:.6g}.")
            if checkpoint_dir is not None and config.checkpoint_every > 0 and k % config.checkpoint_every == 0:
                save_checkpoint(params, Path(checkpoint_dir)/f"k{k:03d}", optimizer.step_count)
    finally:
        if executor is not None:
            executor.shutdown()

    if checkpoint_dir is not None:
        save_checkpoint(params, Path(checkpoint_dir)/"final", optimizer.step_count)

    return E_out, params.endmembers, state
