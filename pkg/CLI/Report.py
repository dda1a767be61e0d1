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

import os
from pathlib import Path
from typing import Optional

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd
from PIL import Image
from prettytable import PrettyTable

from HSICore.Images import AbundanceMatrix, EndmemberMatrix
from HSICore.Metrics import align_endmembers
from ADMM.utils import RunRecord

import logging
logger = logging.getLogger(__name__)

REPORT_COLUMNS = ["method", "run", "rmse_aligned", "msad_rad", "msid_nat", "psnr_db"]
#history columns plotted by plot_history, if present
HISTORY_CURVES = ["ae_loss", "red_value", "primal_residual", "rmse"]


def run_labels(records : list[RunRecord]) -> list[str]:
    """Unique label of every run.
        The directory name if all names differ, otherwise the path relative to the
        common parent of the runs; repeated paths get a numeric suffix.
    """
    names = [record.path.name for record in records]
    if len(set(names)) < len(names):
        paths = [record.path.resolve() for record in records]
        parent = Path(os.path.commonpath([p.parent for p in paths]))
        names = [p.relative_to(parent).as_posix() for p in paths]

    labels = []
    for name in names:
        label, k = name, 1
        while label in labels:
            k += 1
            label = f"{name}_{k}"
        labels.append(label)
    return labels


def report_frame(records : list[RunRecord], labels : Optional[list[str]] = None) -> pd.DataFrame:
    """One row per run: method, run label and the aligned metrics (NaN if unknown).
    """
    if labels is None:
        labels = run_labels(records)
    rows = []
    for record, label in zip(records, labels):
        m = record.metrics
        rows.append({
            "method": record.method,
            "run": label,
            "rmse_aligned": m.get("rmse", np.nan),
            "msad_rad": m.get("msad", np.nan),
            "msid_nat": m.get("msid", np.nan),
            "psnr_db": m.get("psnr", np.nan),
        })
    return pd.DataFrame(rows, columns=REPORT_COLUMNS)


def _cell(value) -> str:
    if isinstance(value, str):
        return value
    if np.isnan(value):
        return "-"
    return f"{value:.4f}"


def report_table(frame : pd.DataFrame) -> PrettyTable:
    table = PrettyTable(["Method", "Run", "RMSE", "mSAD [rad]", "mSID", "PSNR [dB]"])
    for row in frame.itertuples(index=False):
        table.add_row([_cell(v) for v in row])
    return table


def abundance_to_gray(channel : np.ndarray) -> np.ndarray:
    """Map abundances linearly from [0, 1] to 8-bit gray values, clamping outside values.
    """
    return np.rint(np.clip(channel, 0, 1)*255).astype(np.uint8)


def save_abundance_maps(A : AbundanceMatrix, out_dir : str | Path) -> list[Path]:
    """Write one grayscale PNG per endmember, abundance_<r>.png.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = []
    for r, channel in enumerate(A.maps()):
        path = out_dir/f"abundance_{r}.png"
        Image.fromarray(abundance_to_gray(channel)).save(path)
        files.append(path)
    return files


def plot_endmembers(S_est : EndmemberMatrix, path : str | Path, S_true : Optional[EndmemberMatrix] = None,
                    title : str = "") -> Path:
    """Plot the estimated spectra, next to the aligned true spectra if given.
    """
    S = S_est.data
    if S_true is not None:
        S = S[:, list(align_endmembers(S_true, S_est))]

    R = S.shape[1]
    fig, axes = plt.subplots(1, R, figsize=(3*R, 3), sharey=True, squeeze=False)
    fig.suptitle(title)
    for r, ax in enumerate(axes[0]):
        ax.plot(S[:, r], color='b', label="Estimated")
        if S_true is not None:
            ax.plot(S_true.data[:, r], color='k', linestyle='--', label="True")
        ax.set_title(f"Endmember {r}")
        ax.set_xlabel("Band")
    axes[0][0].set_ylabel("Reflectance")
    axes[0][0].legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return Path(path)


def plot_history(history : pd.DataFrame, path : str | Path, title : str = "") -> Path:
    """Plot the ADMM history curves over the iterations.
    """
    curves = [c for c in HISTORY_CURVES if c in history.columns]
    fig, axes = plt.subplots(len(curves), 1, figsize=(8, 2*len(curves)), sharex=True, squeeze=False)
    fig.suptitle(title)
    it = np.array(history["k"])
    for ax, curve in zip(axes[:, 0], curves):
        ax.plot(it, np.array(history[curve]), color='k', marker='.')
        ax.set_ylabel(curve)
    plt.xlabel("Iteration")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return Path(path)
