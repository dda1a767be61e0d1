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
import pandas as pd
import scipy
import torch

from HSICore.FMX import read_fmx, write_fmx
from HSICore.Images import AbundanceMatrix, EndmemberMatrix
from HSICore.Metrics import METRIC_NOTES

import logging
logger = logging.getLogger(__name__)

CONFIG_FILE = "config.json"
HISTORY_FILE = "history.csv"
METRICS_FILE = "metrics.json"
A_HAT_FILE = "A_hat.fmx"
S_HAT_FILE = "S_hat.fmx"
A_AUX_FILE = "A_aux.fmx"
CHECKPOINT_DIR = "checkpoints"


def library_versions() -> dict[str, str]:
    return {
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "torch": torch.__version__,
        "pandas": pd.__version__,
    }


def _dump_json(path : Path, content : dict):
    with open(path, "w") as f:
        json.dump(content, f, indent=2, sort_keys=True)
        f.write("\n")


def write_run(out_dir : str | Path, method : str, config : dict, A_hat : AbundanceMatrix, S_hat : EndmemberMatrix,
              history : Optional[pd.DataFrame] = None, metrics : Optional[dict] = None,
              A_aux : Optional[np.ndarray] = None) -> Path:
    """Write the artifacts of an unmixing run.
        config.json holds no timestamps, so a rerun rewrites identical files.

    Args:
        out_dir (str | Path): Run directory, created if missing.
        method (str): Method name.
        config (dict): Resolved, JSON serializable run configuration (seeds included).
        A_hat (AbundanceMatrix): Estimated abundances.
        S_hat (EndmemberMatrix): Estimated endmembers.
        history (pd.DataFrame, optional): Per-iteration records.
        metrics (dict, optional): Final metrics.
        A_aux (np.ndarray, optional): Auxiliary abundances of the ADMM loop.

    Returns:
        Path: The run directory.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    H, W = A_hat.grid
    _dump_json(out_dir/CONFIG_FILE, {
        "method": method,
        "config": config,
        "height": H,
        "width": W,
        "versions": library_versions(),
    })
    write_fmx(out_dir/A_HAT_FILE, A_hat.data)
    write_fmx(out_dir/S_HAT_FILE, S_hat.data)
    if A_aux is not None:
        write_fmx(out_dir/A_AUX_FILE, A_aux)
    if history is not None:
        history.to_csv(out_dir/HISTORY_FILE, index=False)
    if metrics is not None:
        _dump_json(out_dir/METRICS_FILE, {
            "metrics": {k: (None if not np.isfinite(v) else float(v)) for k, v in metrics.items()},
            "notes": METRIC_NOTES,
        })

    logger.info(f"Saved run artifacts to {out_dir}.")
    return out_dir


@dataclass(frozen=True)
class RunRecord:
    """A run directory read back from disk.
    """
    path : Path
    method : str
    config : dict
    A_hat : AbundanceMatrix
    S_hat : EndmemberMatrix
    metrics : dict
    history : Optional[pd.DataFrame] = None


def read_run(run_dir : str | Path) -> RunRecord:
    """Read a run directory written by write_run.
        A null PSNR (exact reconstruction) reads back as inf, other null metrics as NaN.

    Raises:
        OSError: If a required file is missing.
    """
    run_dir = Path(run_dir)
    with open(run_dir/CONFIG_FILE) as f:
        description = json.load(f)
    H, W = int(description["height"]), int(description["width"])

    A_hat = AbundanceMatrix(read_fmx(run_dir/A_HAT_FILE), H, W, check=False)
    S_hat = EndmemberMatrix(read_fmx(run_dir/S_HAT_FILE), check=False)

    metrics = {}
    if (run_dir/METRICS_FILE).exists():
        with open(run_dir/METRICS_FILE) as f:
            stored = json.load(f)["metrics"]
        metrics = {k: (float("inf") if k == "psnr" and v is None else (float("nan") if v is None else v))
                   for k, v in stored.items()}

    history = pd.read_csv(run_dir/HISTORY_FILE) if (run_dir/HISTORY_FILE).exists() else None
    return RunRecord(path=run_dir, method=description["method"], config=description["config"],
                     A_hat=A_hat, S_hat=S_hat, metrics=metrics, history=history)
