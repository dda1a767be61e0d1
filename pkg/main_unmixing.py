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

# Usage:
#   python main_unmixing.py synth  Configs/scene_20dB.json Scenes/scene_20dB
#   python main_unmixing.py unmix  Scenes/scene_20dB Configs/run_ae_red.json Runs/ae_red
#   python main_unmixing.py report Runs/ae_red Runs/plain_ae --out Reports
from __future__ import annotations

import argparse
import os
import sys

from CLI.commands import EXIT_CONFIG, cmd_report, cmd_synth, cmd_unmix

import logging
from logging.handlers import RotatingFileHandler

LOG_FORMAT = "[%(asctime)s] %(levelname)s [%(name)s.%(funcName)s:%(lineno)d] %(message)s"
THREADS_ENV = "UNMIX_THREADS"


def setup_logging(verbosity : int, log_file : str | None):
    console = logging.StreamHandler()
    console.setLevel([logging.WARNING, logging.INFO, logging.DEBUG][min(verbosity, 2)])
    handlers = [console]
    if log_file is not None:
        logHandler = RotatingFileHandler(filename=log_file, mode='w', maxBytes=100e3, backupCount=1, encoding='utf-8')
        logHandler.setLevel(logging.DEBUG)
        handlers.append(logHandler)
    logging.basicConfig(handlers=handlers, level=logging.DEBUG, format=LOG_FORMAT)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Hyperspectral unmixing with autoencoders regularized by denoising.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug output.")
    parser.add_argument("--log-file", default=None, help="Write a debug log to this file.")
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="Generate a synthetic scene.")
    synth.add_argument("config", help="Scene configuration (JSON).")
    synth.add_argument("out_dir", help="Scene directory.")
    synth.add_argument("--seed", type=int, default=None, help="Overrides the configured seed.")

    unmix = sub.add_parser("unmix", help="Unmix a scene.")
    unmix.add_argument("scene_dir", help="Scene directory.")
    unmix.add_argument("run_config", help="Run configuration (JSON).")
    unmix.add_argument("out_dir", help="Run directory.")
    unmix.add_argument("--seed", type=int, default=None, help="Overrides the configured seed.")
    unmix.add_argument("--threads", type=int, default=None, help=f"Number of denoiser workers, also set by {THREADS_ENV}.")
    unmix.add_argument("--progress", action="store_true", help="Show progress bars.")

    report = sub.add_parser("report", help="Compare runs.")
    report.add_argument("run_dirs", nargs="+", help="Run directories.")
    report.add_argument("--out", default=".", help="Output directory of report.csv and the maps.")
    report.add_argument("--plots", action="store_true", help="Also plot endmembers and histories.")
    return parser


def resolve_threads(threads : int | None) -> int | None:
    """Number of denoiser workers, from --threads or the environment.
    """
    if threads is None and os.environ.get(THREADS_ENV):
        threads = int(os.environ[THREADS_ENV])
    if threads is not None and threads < 1:
        raise ValueError(f"Number of threads must be >= 1, got {threads}.")
    return threads


def main(argv : list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.verbose, args.log_file)

    if args.command == "synth":
        return cmd_synth(args.config, args.out_dir, args.seed)
    if args.command == "unmix":
        try:
            threads = resolve_threads(args.threads)
        except ValueError as e:
            print(f"Configuration error: threads: {e}")
            return EXIT_CONFIG
        return cmd_unmix(args.scene_dir, args.run_config, args.out_dir, args.seed, threads, args.progress)
    return cmd_report(args.run_dirs, args.out, args.plots)


if __name__ == '__main__':
    sys.exit(main())
