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
import torch
import torch.nn as nn

from HSICore.Errors import ConstraintError, DimensionError
from HSICore.Images import AbundanceMatrix, EndmemberMatrix, HyperspectralImage
from HSICore.Mixing import lmm_mix, mix_pixels
from Network.Encoder import CNNEncoder, EncoderSpec

import logging
logger = logging.getLogger(__name__)


class LMMDecoder(nn.Module):
    """Decoder mimicking the LMM, a 1x1 convolution without bias whose weights are the endmembers.
    """
    def __init__(self, bands : int, n_endmembers : int):
        super().__init__()
        self.S = nn.Parameter(torch.zeros(bands, n_endmembers, dtype=torch.float64))

    def forward(self, A : torch.Tensor) -> torch.Tensor:
        """Mix R x N abundances into a B x N image.
        """
        return mix_pixels(self.S, A)


class AutoEncoder(nn.Module):
    """All trainable parameters of the unmixing autoencoder.
        The decoder's weight block S is the endmember matrix.
    """
    def __init__(self, spec : EncoderSpec):
        super().__init__()
        self.spec = spec
        self.encoder = CNNEncoder(spec)
        self.decoder = LMMDecoder(spec.bands, spec.n_endmembers)

    @property
    def endmembers(self) -> EndmemberMatrix:
        return EndmemberMatrix(self.decoder.S.detach().numpy(), check=False)

    def abundances(self, x : torch.Tensor) -> torch.Tensor:
        """Encode a 1 x B x H x W image into R x N abundances (pixels in raster order).
        """
        out = self.encoder(x)
        return out.reshape(self.spec.n_endmembers, -1)

    def forward(self, x : torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        E = self.abundances(x)
        return E, self.decoder(E)


def image_tensor(Y : HyperspectralImage) -> torch.Tensor:
    """Get an image as a 1 x B x H x W float64 tensor.
    """
    return torch.from_numpy(np.array(Y.cube(), copy=True)).unsqueeze(0)


def encoder_forward(params : AutoEncoder, Y : HyperspectralImage) -> AbundanceMatrix:
    """Abundances estimated by the encoder, E(Y).

    Args:
        params (AutoEncoder): Autoencoder.
        Y (HyperspectralImage): Image, the whole image is the input.

    Raises:
        DimensionError: If the band count differs from the encoder's input channels.

    Returns:
        AbundanceMatrix: R x N abundances on the simplex.
    """
    if Y.bands != params.spec.bands:
        raise DimensionError(f"Encoder expects {params.spec.bands} bands, image has {Y.bands}.")
    with torch.no_grad():
        E = params.abundances(image_tensor(Y)).numpy()
    return AbundanceMatrix(E, Y.height, Y.width)


def decoder_forward(S : EndmemberMatrix, A : AbundanceMatrix) -> HyperspectralImage:
    """LMM decoder, shares its implementation with lmm_mix.
    """
    return lmm_mix(S, A)


def _uniform_(tensor : torch.Tensor, bound : float, generator : torch.Generator):
    with torch.no_grad():
        tensor.copy_((2*torch.rand(tensor.shape, generator=generator, dtype=tensor.dtype)-1)*bound)


def farthest_point_pixels(Y : np.ndarray, R : int, seed : int) -> list[int]:
    """Select R pixels spanning the data.
        A seeded random pixel is the anchor, the first pick is the pixel farthest from
        it, every further pick is the pixel farthest from the affine hull of the picks.
        For data inside a simplex the picks are vertices, so pure pixels are found.

    Args:
        Y (np.ndarray): B x N pixels.
        R (int): Number of pixels to select.
        seed (int): Seed of the anchor.

    Raises:
        ConstraintError: If fewer than R distinct pixels exist.

    Returns:
        list[int]: Pixel indices.
    """
    B, N = Y.shape
    n_distinct = np.unique(Y.T, axis=0).shape[0]
    if n_distinct < R:
        raise ConstraintError(f"Image has {n_distinct} distinct pixels, {R} endmembers requested.")

    rng = np.random.default_rng(seed)
    anchor = Y[:, int(rng.integers(N))]
    distances = np.linalg.norm(Y - anchor[:, np.newaxis], axis=0)
    chosen = [int(np.argmax(distances))]

    while len(chosen) < R:
        base = Y[:, chosen[0]][:, np.newaxis]
        D = Y - base
        if len(chosen) > 1:
            Q, _ = np.linalg.qr(Y[:, chosen[1:]] - base)
            D = D - Q @ (Q.T @ D)
        distances = np.linalg.norm(D, axis=0)
        distances[chosen] = -1
        best = int(np.argmax(distances))
        if distances[best] <= 0:
            raise ConstraintError(f"Only {len(chosen)} affinely independent pixels, {R} endmembers requested.")
        chosen.append(best)
    return chosen


def init_params(spec : EncoderSpec, Y : HyperspectralImage, R : int, seed : int) -> AutoEncoder:
    """Initialize the autoencoder.
        Encoder kernels are He-style uniform, biases zero; the endmembers are R image
        pixels chosen by farthest-point selection, clamped at 0.

    Args:
        spec (EncoderSpec): Encoder architecture.
        Y (HyperspectralImage): Image to unmix.
        R (int): Number of endmembers.
        seed (int): Seed.

    Returns:
        AutoEncoder: Initialized parameters.
    """
    if spec.n_endmembers != R or spec.bands != Y.bands:
        raise DimensionError(f"Encoder spec (B={spec.bands}, R={spec.n_endmembers}) does not fit B={Y.bands}, R={R}.")

    model = AutoEncoder(spec)
    generator = torch.Generator().manual_seed(seed)
    for module in model.encoder.modules():
        if isinstance(module, nn.Conv2d):
            fan_in = module.in_channels*module.kernel_size[0]*module.kernel_size[1]
            _uniform_(module.weight, np.sqrt(6.0/fan_in), generator)
            with torch.no_grad():
                module.bias.zero_()

    pixels = farthest_point_pixels(Y.data, R, seed)
    logger.debug(f"Initial endmembers taken from pixels {pixels}.")
    with torch.no_grad():
        model.decoder.S.copy_(torch.from_numpy(np.maximum(Y.data[:, pixels], 0)))
    return model
