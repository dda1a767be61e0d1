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

from HSICore.Images import HyperspectralImage, AbundanceMatrix, EndmemberMatrix
from HSICore.Mixing import lmm_mix
from HSICore.Projections import project_simplex_columns

__all__ = [
    "HyperspectralImage",
    "AbundanceMatrix",
    "EndmemberMatrix",
    "lmm_mix",
    "project_simplex_columns",
]
