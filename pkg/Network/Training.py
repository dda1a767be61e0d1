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

from typing import Optional

import numpy as np
import torch
import torch.nn as nn
from torch.optim import Adam
from tqdm.auto import tqdm

from HSICore.Errors import ConstraintError, DimensionError, NonFiniteGradientError, TrainingDivergenceError
from HSICore.Images import HyperspectralImage
from Network.AutoEncoder import AutoEncoder, image_tensor

import logging
logger = logging.getLogger(__name__)

#parameters kept elementwise nonnegative after every step
DECODER_BLOCK = "decoder.S"


def _as_tensor(M) -> torch.Tensor:
    M = getattr(M, "data", M)
    if isinstance(M, torch.Tensor):
        return M.detach().to(torch.float64)
    return torch.from_numpy(np.array(M, dtype=np.float64))


def _check_shapes(params : AutoEncoder, Y : HyperspectralImage, A, G):
    R, N = params.spec.n_endmembers, Y.n_pixels
    if Y.bands != params.spec.bands:
        raise DimensionError(f"Encoder expects {params.spec.bands} bands, image has {Y.bands}.")
    for name, M in (("A", A), ("G", G)):
        if tuple(M.shape) != (R, N):
            raise DimensionError(f"{name} has shape {tuple(M.shape)}, expected {(R, N)}.")


def _loss(params : AutoEncoder, x : torch.Tensor, Y : torch.Tensor, A : torch.Tensor, G : torch.Tensor,
          mu : float, bypass : Optional[torch.Tensor] = None) -> torch.Tensor:
    E = params.abundances(x) if bypass is None else bypass
    reconstruction = torch.sum((Y - params.decoder(E))**2)
    if mu == 0:
        return reconstruction
    return reconstruction + mu*torch.sum((A - E - G)**2)


def ae_loss(params : AutoEncoder, Y : HyperspectralImage, A, G, mu : float) -> float:
    """Training objective ||Y - S E(Y)||_F^2 + mu ||A - E(Y) - G||_F^2.

    Args:
        params (AutoEncoder): Autoencoder.
        Y (HyperspectralImage): Image.
        A (np.ndarray): R x N auxiliary abundances.
        G (np.ndarray): R x N dual variable.
        mu (float): ADMM penalty, >= 0.

    Returns:
        float: Loss value.
    """
    if mu < 0:
        raise ConstraintError(f"mu must be nonnegative, got {mu}.")
    A_t, G_t = _as_tensor(A), _as_tensor(G)
    _check_shapes(params, Y, A_t, G_t)
    with torch.no_grad():
        return float(_loss(params, image_tensor(Y), _as_tensor(Y.data), A_t, G_t, mu))


def ae_loss_gradients(params : AutoEncoder, Y : HyperspectralImage, A, G, mu : float) -> dict[str, np.ndarray]:
    """Exact gradients of ae_loss by reverse-mode differentiation.

    Returns:
        dict[str, np.ndarray]: key: parameter block name, value: gradient of the block.
    """
    if mu < 0:
        raise ConstraintError(f"mu must be nonnegative, got {mu}.")
    A_t, G_t = _as_tensor(A), _as_tensor(G)
    _check_shapes(params, Y, A_t, G_t)
    params.zero_grad(set_to_none=True)
    loss = _loss(params, image_tensor(Y), _as_tensor(Y.data), A_t, G_t, mu)
    loss.backward()
    grads = {}
    for name, p in params.named_parameters():
        grads[name] = np.zeros(tuple(p.shape)) if p.grad is None else p.grad.detach().numpy().copy()
    params.zero_grad(set_to_none=True)
    return grads


class AdamState:
    """Adam moments and step counter of a set of parameters.
        The decoder block gets its own learning rate (fine-tuning rate).
    """
    def __init__(self, params : nn.Module, lr : float = 1e-3, lr_decoder : float | None = None,
                 betas : tuple[float, float] = (0.9, 0.999), eps : float = 1e-8,
                 nonnegative : tuple[str, ...] = (DECODER_BLOCK,)) -> None:
        if not lr > 0:
            raise ConstraintError(f"Learning rate must be positive, got {lr}.")
        named = dict(params.named_parameters())
        decoder = [p for n, p in named.items() if n == DECODER_BLOCK]
        main = [p for n, p in named.items() if n != DECODER_BLOCK]

        groups = []
        if main:
            groups.append({"params": main, "lr": lr, "name": "main"})
        if decoder:
            groups.append({"params": decoder, "lr": lr if lr_decoder is None else lr_decoder, "name": "decoder"})

        self.optimizer = Adam(groups, lr=lr, betas=betas, eps=eps)
        self.nonnegative = tuple(nonnegative)
        self.step_count = 0

    def moments(self) -> dict[str, tuple[torch.Tensor, torch.Tensor]]:
        """Get the first and second moment accumulators of every parameter that took a step.
        """
        out = {}
        for group in self.optimizer.param_groups:
            for i, p in enumerate(group["params"]):
                s = self.optimizer.state.get(p, {})
                if "exp_avg" in s:
                    out[f"{group['name']}.{i}"] = (s["exp_avg"], s["exp_avg_sq"])
        return out


def adam_step(params : nn.Module, grads : dict, state : AdamState, lr : float | None = None) -> tuple[nn.Module, AdamState]:
    """One bias-corrected Adam update, then the nonnegative blocks are clamped at 0.

    Args:
        params (nn.Module): Parameters to update (in place).
        grads (dict): key: block name, value: gradient (array or tensor). Missing blocks are not updated.
        state (AdamState): Optimizer state.
        lr (float, optional): Overrides the learning rate of the main group.

    Raises:
        NonFiniteGradientError: If a gradient block holds inf or nan.

    Returns:
        tuple[nn.Module, AdamState]: The updated parameters and state.
    """
    named = dict(params.named_parameters())
    for name, g in grads.items():
        if g is None:
            continue
        g = _as_tensor(g)
        if not torch.all(torch.isfinite(g)):
            raise NonFiniteGradientError(name)
        if name not in named:
            raise DimensionError(f"Unknown parameter block '{name}'.")
        if tuple(g.shape) != tuple(named[name].shape):
            raise DimensionError(f"Gradient of '{name}' has shape {tuple(g.shape)}, expected {tuple(named[name].shape)}.")
        named[name].grad = g.clone()

    if lr is not None:
        if not lr > 0:
            raise ConstraintError(f"Learning rate must be positive, got {lr}.")
        for group in state.optimizer.param_groups:
            if group["name"] == "main":
                group["lr"] = lr

    state.optimizer.step()
    state.optimizer.zero_grad(set_to_none=True)
    state.step_count += 1

    with torch.no_grad():
        for name in state.nonnegative:
            if name in named:
                named[name].clamp_(min=0)
    return params, state


def train_ae(params : AutoEncoder, Y : HyperspectralImage, A, G, mu : float, epochs : int,
             state : AdamState | None = None, lr : float = 1e-3, lr_decoder : float = 1e-4, seed : int = 0,
             bypass_abundances=None, show_progress : bool = False) -> tuple[AutoEncoder, list[float]]:
    """Train the autoencoder on the whole image, one full-batch Adam step per epoch.

    Args:
        params (AutoEncoder): Autoencoder, updated in place (warm start).
        Y (HyperspectralImage): Image.
        A (np.ndarray): R x N auxiliary abundances.
        G (np.ndarray): R x N dual variable.
        mu (float): ADMM penalty.
        epochs (int): Number of epochs, >= 1.
        state (AdamState, optional): Optimizer state to continue. A new one is created if None.
        lr (float, optional): Encoder learning rate of a new state. Defaults to 1e-3.
        lr_decoder (float, optional): Decoder learning rate of a new state. Defaults to 1e-4.
        seed (int, optional): Torch seed. Defaults to 0.
        bypass_abundances (np.ndarray, optional): Fixed abundances replacing the encoder output,
            only the endmembers are trained then.
        show_progress (bool, optional): Show a progress bar. Defaults to False.

    Raises:
        TrainingDivergenceError: If the loss becomes non-finite.

    Returns:
        tuple[AutoEncoder, list[float]]: The trained parameters and the loss of every epoch.
    """
    if epochs < 1:
        raise ConstraintError(f"epochs must be >= 1, got {epochs}.")
    if mu < 0:
        raise ConstraintError(f"mu must be nonnegative, got {mu}.")
    A_t, G_t = _as_tensor(A), _as_tensor(G)
    _check_shapes(params, Y, A_t, G_t)

    torch.manual_seed(seed)
    if state is None:
        state = AdamState(params, lr=lr, lr_decoder=lr_decoder)

    x = image_tensor(Y)
    Y_t = _as_tensor(Y.data)
    bypass = None if bypass_abundances is None else _as_tensor(bypass_abundances)

    params.train()
    losses = []
    for epoch in tqdm(range(epochs), desc="Training", disable=not show_progress, leave=False):
        state.optimizer.zero_grad(set_to_none=True)
        loss = _loss(params, x, Y_t, A_t, G_t, mu, bypass)
        value = float(loss.detach())
        if not np.isfinite(value):
            raise TrainingDivergenceError(epoch, value)
        losses.append(value)

        loss.backward()
        grads = {name: p.grad for name, p in params.named_parameters()}
        adam_step(params, grads, state)

    logger.debug(f"Trained {epochs} epochs, loss {losses[0]} -> {losses[-1]}.")
    return params, losses
