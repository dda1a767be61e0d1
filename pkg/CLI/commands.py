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
import math
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError
import torch

from HSICore.Errors import ConfigError, UnmixingError
from HSICore.Metrics import ReferenceData, evaluate
from SynthGen.SceneConfig import CSVSource, format_validation_error, load_scene_config
from SynthGen.Scene import load_scene_dir, make_scene, save_scene
from ADMM.AE_RED import AdmmConfig, run_ae_red
from ADMM.utils import CHECKPOINT_DIR, read_run, write_run
from Baselines.FCLS import fcls
from Baselines.PlainAE import plain_ae
from CLI.Report import (plot_endmembers, plot_history, report_frame, report_table, run_labels,
                        save_abundance_maps)

import logging
logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2

#keys of a run file that are not ADMM parameters
RUN_KEYS = ("method", "R", "fcls_iters", "preset_snr_db")
#torch intra-op threads of every run, independent of the denoiser workers
TRAINING_THREADS = 1


class RunConfig(BaseModel):
    """A run file: the method, its options and the ADMM parameters as flat keys.
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    method : Literal["ae-red", "plain-ae", "fcls"] = "ae-red"
    R : Optional[int] = Field(default=None, ge=1)
    fcls_iters : int = Field(default=5000, ge=1)
    preset_snr_db : Optional[float] = None
    admm : AdmmConfig = Field(default_factory=AdmmConfig)

    @classmethod
    def from_definition(cls, definition : dict, seed : Optional[int] = None, n_jobs : Optional[int] = None) -> RunConfig:
        """Build a run configuration from the flat JSON object of a run file.
            With "preset_snr_db", lambda and mu default to the noise-level preset.
        """
        if not isinstance(definition, dict):
            raise ConfigError("<root>", "a run configuration must be a JSON object")
        run = {k: definition[k] for k in RUN_KEYS if k in definition}
        admm = {("lam" if k == "lambda" else k): v for k, v in definition.items() if k not in RUN_KEYS}
        if seed is not None:
            admm["seed"] = seed
        if n_jobs is not None:
            admm["n_jobs"] = n_jobs
        try:
            if run.get("preset_snr_db") is not None:
                config = AdmmConfig.for_snr(float(run["preset_snr_db"]), **admm)
            else:
                config = AdmmConfig(**admm)
            return cls(admm=config, **run)
        except ValidationError as e:
            raise format_validation_error(e) from e

    def resolved(self) -> dict:
        """JSON view of the run, flat like the run file, with every default filled in but the worker count.
        """
        resolved = self.admm.model_dump(mode="json", by_alias=True, exclude={"n_jobs"})
        resolved.update(self.model_dump(mode="json", exclude={"admm"}))
        return resolved


def load_run_config(path : str | Path, seed : Optional[int] = None, n_jobs : Optional[int] = None) -> RunConfig:
    try:
        with open(path) as f:
            definition = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError("<file>", f"{path} is not valid JSON ({e})") from e
    return RunConfig.from_definition(definition, seed, n_jobs)


def metric_summary(metrics : dict) -> str:
    """One-line summary; only PSNR without ground truth.
    """
    parts = []
    if "rmse" in metrics:
        parts.append(f"RMSE={metrics['rmse']:.6f}")
        parts.append(f"mSAD={metrics['msad']:.6f}")
        parts.append(f"mSID={metrics['msid']:.6f}")
    parts.append(f"PSNR={metrics['psnr']:.4f} dB")
    return " ".join(parts)


def _run_command(fn, *args) -> int:
    try:
        return fn(*args)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        print(f"Configuration error: {e}")
        return EXIT_CONFIG
    except ValidationError as e:
        error = format_validation_error(e)
        print(f"Configuration error: {error}")
        return EXIT_CONFIG
    except (UnmixingError, OSError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"Error: {e}")
        return EXIT_FAILURE


def _synth(config_path : str | Path, out_dir : str | Path, seed : Optional[int]) -> int:
    config_path = Path(config_path)
    config = load_scene_config(config_path, seed)

    #library paths are relative to the configuration file
    source = config.endmember_source
    if isinstance(source, CSVSource) and not Path(source.path).is_absolute():
        source = source.model_copy(update={"path": str(config_path.parent/source.path)})
        config = config.model_copy(update={"endmember_source": source})

    scene = make_scene(config)
    save_scene(scene, out_dir)
    if math.isinf(scene.realized_snr_db):
        print("Realized SNR: noise-free")
    else:
        print(f"Realized SNR: {scene.realized_snr_db:.4f} dB")
    return EXIT_OK


def cmd_synth(config_path : str | Path, out_dir : str | Path, seed : Optional[int] = None) -> int:
    """Generate a synthetic scene directory.

    Args:
        config_path (str | Path): Scene configuration (JSON).
        out_dir (str | Path): Scene directory to write.
        seed (int, optional): Overrides the seed of the configuration.

    Returns:
        int: Exit code, 0 success, 2 invalid configuration, 1 other failures.
    """
    return _run_command(_synth, config_path, out_dir, seed)


def _unmix(scene_dir : str | Path, run_config_path : str | Path, out_dir : str | Path,
           seed : Optional[int], threads : Optional[int], show_progress : bool) -> int:
    run = load_run_config(run_config_path, seed, threads)
    torch.set_num_threads(TRAINING_THREADS)
    scene = load_scene_dir(scene_dir)
    reference = scene.reference()

    R = run.R
    if R is None:
        if scene.S_true is None:
            raise ConfigError("R", "the scene has no S_true, the run configuration must give the number of endmembers")
        R = scene.S_true.n_endmembers
    if scene.S_true is not None and R != scene.S_true.n_endmembers:
        logger.warning(f"R={R} differs from the {scene.S_true.n_endmembers} true endmembers, ground truth metrics are skipped.")
        reference = ReferenceData(Y_ref=reference.Y_ref)

    out_dir = Path(out_dir)
    checkpoints = out_dir/CHECKPOINT_DIR
    history = None
    A_aux = None
    if run.method == "fcls":
        if scene.S_true is None:
            raise ConfigError("method", "fcls needs the true endmembers S_true.fmx of the scene")
        S_hat = scene.S_true
        A_hat = fcls(scene.Y, S_hat, run.fcls_iters, show_progress=show_progress)
    elif run.method == "plain-ae":
        A_hat, S_hat, state = plain_ae(scene.Y, run.admm, R, reference=reference, checkpoint_dir=checkpoints,
                                       show_progress=show_progress, with_state=True)
        history, A_aux = state.history_frame(), state.A
    else:
        A_hat, S_hat, state = run_ae_red(scene.Y, run.admm, R, reference=reference, checkpoint_dir=checkpoints,
                                         show_progress=show_progress)
        history, A_aux = state.history_frame(), state.A

    metrics = evaluate(reference, A_hat, S_hat)
    config = run.resolved()
    config["R"] = R
    config["scene_dir"] = str(scene_dir)
    config["training_threads"] = TRAINING_THREADS
    write_run(out_dir, run.method, config, A_hat, S_hat, history, metrics, A_aux)
    print(metric_summary(metrics))
    return EXIT_OK


def cmd_unmix(scene_dir : str | Path, run_config_path : str | Path, out_dir : str | Path, seed : Optional[int] = None,
              threads : Optional[int] = None, show_progress : bool = False) -> int:
    """Unmix a scene and write the run artifacts.

    Args:
        scene_dir (str | Path): Scene directory.
        run_config_path (str | Path): Run configuration (JSON), selects ae-red, plain-ae or fcls.
        out_dir (str | Path): Run directory to write.
        seed (int, optional): Overrides the seed of the run configuration.
        threads (int, optional): Number of denoiser workers.
        show_progress (bool, optional): Show progress bars. Defaults to False.

    Returns:
        int: Exit code, 0 success, 2 invalid configuration, 1 other failures.
    """
    return _run_command(_unmix, scene_dir, run_config_path, out_dir, seed, threads, show_progress)


def _report_plots(record, label : str, out_dir : Path):
    S_true = None
    scene_dir = record.config.get("scene_dir")
    if scene_dir is not None and (Path(scene_dir)/"S_true.fmx").exists():
        scene = load_scene_dir(scene_dir)
        if scene.S_true is not None and scene.S_true.data.shape == record.S_hat.data.shape:
            S_true = scene.S_true
    plot_endmembers(record.S_hat, out_dir/"endmembers.png", S_true, title=label)
    if record.history is not None and len(record.history) > 0:
        plot_history(record.history, out_dir/"history.png", title=label)


def _report(run_dirs : list[str | Path], out_dir : str | Path, plots : bool) -> int:
    out_dir = Path(out_dir)
    records = []
    for run_dir in run_dirs:
        try:
            records.append(read_run(run_dir))
        except (OSError, KeyError, ValueError) as e:
            logger.warning(f"Skipping run {run_dir}: {e}")
            print(f"Skipping unreadable run {run_dir}: {e}")
    if not records:
        print("No readable run.")
        return EXIT_FAILURE

    out_dir.mkdir(parents=True, exist_ok=True)
    labels = run_labels(records)
    frame = report_frame(records, labels)
    print(report_table(frame))
    frame.to_csv(out_dir/"report.csv", index=False)

    for record, label in zip(records, labels):
        maps_dir = out_dir/"maps"/label
        save_abundance_maps(record.A_hat, maps_dir)
        if plots:
            _report_plots(record, label, maps_dir)
    return EXIT_OK


def cmd_report(run_dirs : list[str | Path], out_dir : str | Path = ".", plots : bool = False) -> int:
    """Compare runs: print a table, write report.csv and the abundance maps.
        Unreadable runs are listed and skipped.

    Args:
        run_dirs (list[str | Path]): Run directories, at least one.
        out_dir (str | Path, optional): Output directory. Defaults to the working directory.
        plots (bool, optional): Also plot endmember spectra and history curves. Defaults to False.

    Returns:
        int: Exit code, 1 if no run could be read.
    """
    if len(run_dirs) == 0:
        print("No run directory given.")
        return EXIT_CONFIG
    return _run_command(_report, run_dirs, out_dir, plots)
