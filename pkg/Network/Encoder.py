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

import torch
import torch.nn as nn
from pydantic import BaseModel, ConfigDict, Field, field_validator


class EncoderSpec(BaseModel):
    """Architecture of the CNN encoder.
        Five blocks: two 3x3 convolutions, two 1x1 convolutions and a final 1x1
        convolution with a channelwise softmax. The widths shrink as
        B -> hidden[0] -> hidden[1] -> hidden[2] -> 2R -> R.
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    bands : int = Field(ge=1)
    n_endmembers : int = Field(ge=1)
    hidden : tuple[int, int, int] = (64, 32, 16)
    negative_slope : float = Field(default=0.01, ge=0)

    @field_validator("hidden")
    @classmethod
    def _positive_widths(cls, v):
        if any(w < 1 for w in v):
            raise ValueError("hidden widths must be positive")
        return v

    def block_widths(self) -> list[tuple[int, int, int]]:
        """Get (in_channels, out_channels, kernel_size) of the five blocks.
        """
        h1, h2, h3 = self.hidden
        R = self.n_endmembers
        return [
            (self.bands, h1, 3),
            (h1, h2, 3),
            (h2, h3, 1),
            (h3, 2*R, 1),
            (2*R, R, 1),
        ]


class CNNEncoder(nn.Module):
    def __init__(self, spec : EncoderSpec):
        super().__init__()
        self.spec = spec

        layers = []
        blocks = spec.block_widths()
        for i, (c_in, c_out, k) in enumerate(blocks):
            layers.append(nn.Conv2d(c_in, c_out, kernel_size=k, stride=1, padding=k//2, dtype=torch.float64))
            if i < len(blocks)-1:
                layers.append(nn.LeakyReLU(spec.negative_slope))
        self.blocks = nn.Sequential(*layers)
        self.softmax = nn.Softmax(dim=1)

    def forward(self, x : torch.Tensor) -> torch.Tensor:
        """Abundances of an image batch.

        Args:
            x (torch.Tensor): 1 x B x H x W image.

        Returns:
            torch.Tensor: 1 x R x H x W abundances, softmax across R.
        """
        return self.softmax(self.blocks(x))
