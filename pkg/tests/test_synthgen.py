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

import numpy as np
import pytest
from pydantic import ValidationError

from HSICore.Errors import ConfigError, DimensionError, LibraryParseError
from HSICore.FMX import read_fmx
from HSICore.Images import HyperspectralImage
from HSICore.Metrics import msad, rmse, sad_matrix, snr_db
from SynthGen.Generators import add_noise, gaussian_field_abundances, load_endmembers_csv, procedural_endmembers
from SynthGen.Scene import SCENE_FILES, component_seeds, load_scene_dir, make_scene, save_scene
from SynthGen.SceneConfig import CSVSource, SceneConfig, load_scene_config

from conftest import write_json


def _autocorrelation(X : np.ndarray, lag : int) -> float:
    X = X - X.mean()
    return float(np.sum(X[:, :-lag]*X[:, lag:])/np.sum(X*X))


class TestGaussianField:
    def test_single_endmember_is_all_ones(self):
        A = gaussian_field_abundances(5, 6, 1, 2.0, seed=0)
        np.testing.assert_array_equal(A.data, np.ones((1, 30)))

    def test_simplex_and_open_interval(self):
        for seed in range(5):
            A = gaussian_field_abundances(12, 10, 4, 3.0, seed)
            np.testing.assert_allclose(A.data.sum(axis=0), 1, atol=1e-12)
            assert np.all(A.data > 0) and np.all(A.data < 1)

    def test_deterministic(self):
        a = gaussian_field_abundances(10, 10, 3, 2.0, seed=7)
        b = gaussian_field_abundances(10, 10, 3, 2.0, seed=7)
        assert a.data.tobytes() == b.data.tobytes()

    def test_spatially_correlated(self):
        maps = gaussian_field_abundances(64, 64, 3, 5.0, seed=11).maps()
        assert _autocorrelation(maps[0], 1) > _autocorrelation(maps[0], 10)

    def test_mixed_pixels(self):
        A = gaussian_field_abundances(50, 50, 4, 5.0, seed=1)
        typical = np.median(A.data.max(axis=0))
        assert 0.4 < typical < 0.95


class TestProceduralEndmembers:
    def test_positive_and_separated(self):
        for seed in range(10):
            S = procedural_endmembers(50, 5, seed)
            assert np.all(S.data > 0)
            angles = sad_matrix(S, S)
            assert angles[~np.eye(5, dtype=bool)].min() >= 0.15
            assert np.all((S.data.max(axis=0) >= 0.4 - 1e-12) & (S.data.max(axis=0) <= 1.0 + 1e-12))

    def test_deterministic(self):
        np.testing.assert_array_equal(procedural_endmembers(20, 3, 4).data, procedural_endmembers(20, 3, 4).data)

    def test_too_few_bands(self):
        with pytest.raises(DimensionError):
            procedural_endmembers(3, 2, 0)


class TestCSVLibrary:
    def _write(self, tmp_path, text):
        path = tmp_path/"lib.csv"
        path.write_text(text)
        return path

    def test_exact_column_count(self, separated_library):
        S = load_endmembers_csv(separated_library, 3, selection_seed=0)
        assert S.bands == 12 and S.n_endmembers == 3
        #every spectrum is used once
        np.testing.assert_array_equal(np.sort(np.argmax(S.data, axis=0)), [0, 4, 8])

    def test_deterministic_selection(self, separated_library):
        a = load_endmembers_csv(separated_library, 2, selection_seed=5)
        b = load_endmembers_csv(separated_library, 2, selection_seed=5)
        np.testing.assert_array_equal(a.data, b.data)

    def test_too_many_requested(self, separated_library):
        with pytest.raises(LibraryParseError):
            load_endmembers_csv(separated_library, 4, selection_seed=0)

    def test_negative_readings_clamped(self, tmp_path):
        path = self._write(tmp_path, "a,b\n0.5,-0.1\n0.2,0.3\n")
        S = load_endmembers_csv(path, 2, 0)
        assert S.data.min() == 0.0

    def test_non_numeric_cell_line(self, tmp_path):
        path = self._write(tmp_path, "a,b\n0.5,0.1\nfoo,0.3\n")
        with pytest.raises(LibraryParseError) as info:
            load_endmembers_csv(path, 2, 0)
        assert info.value.line == 3

    @pytest.mark.parametrize("cell", ["nan", "inf", "-inf", "NaN"])
    def test_non_finite_cell_line(self, tmp_path, cell):
        path = self._write(tmp_path, f"a,b\n0.5,0.1\n{cell},0.3\n")
        with pytest.raises(LibraryParseError) as info:
            load_endmembers_csv(path, 2, 0)
        assert info.value.line == 3

    def test_header_only(self, tmp_path):
        path = self._write(tmp_path, "a,b\n")
        with pytest.raises(LibraryParseError) as info:
            load_endmembers_csv(path, 2, 0)
        assert info.value.line == 2

    def test_short_row_line(self, tmp_path):
        path = self._write(tmp_path, "a,b\n0.5,0.1\n0.2,0.3\n0.4\n")
        with pytest.raises(LibraryParseError) as info:
            load_endmembers_csv(path, 2, 0)
        assert info.value.line == 4

    def test_long_row(self, tmp_path):
        path = self._write(tmp_path, "a,b\n0.5,0.1\n0.2,0.3,0.9\n")
        with pytest.raises(LibraryParseError):
            load_endmembers_csv(path, 2, 0)


class TestNoise:
    def test_noise_free(self, rng):
        Y = HyperspectralImage(rng.random((4, 9)), 3, 3)
        np.testing.assert_array_equal(add_noise(Y, None, 0).data, Y.data)
        np.testing.assert_array_equal(add_noise(Y, float("inf"), 0).data, Y.data)

    def test_realized_snr(self, rng):
        Y = HyperspectralImage(rng.random((50, 100*100)), 100, 100)
        for target in (5.0, 20.0, 30.0):
            assert abs(snr_db(Y, add_noise(Y, target, seed=2)) - target) < 0.1

    def test_deterministic(self, rng):
        Y = HyperspectralImage(rng.random((4, 9)), 3, 3)
        np.testing.assert_array_equal(add_noise(Y, 10.0, 3).data, add_noise(Y, 10.0, 3).data)


class TestSceneConfig:
    def test_infinite_snr_means_noise_free(self):
        config = SceneConfig(height=2, width=2, R=1, B=4, correlation_length=1.0, snr_db=float("inf"))
        assert config.noise_free

    def test_invalid_fields(self):
        with pytest.raises(ValidationError):
            SceneConfig(height=0, width=2, R=1, B=4, correlation_length=1.0)
        with pytest.raises(ValidationError):
            SceneConfig(height=2, width=2, R=1, B=4, correlation_length=0.0)

    def test_procedural_needs_four_bands(self, tmp_path):
        path = write_json(tmp_path/"scene.json", {"height": 4, "width": 4, "R": 2, "B": 3, "correlation_length": 1.0})
        with pytest.raises(ConfigError) as info:
            load_scene_config(path)
        assert info.value.field == "B"
        config = SceneConfig(height=4, width=4, R=2, B=3, correlation_length=1.0,
                             endmember_source={"kind": "csv", "path": "lib.csv"})
        assert config.B == 3

    def test_missing_field_is_named(self, tmp_path):
        path = write_json(tmp_path/"scene.json", {"height": 4, "width": 4, "B": 10, "correlation_length": 1.0})
        with pytest.raises(ConfigError) as info:
            load_scene_config(path)
        assert info.value.field == "R"

    def test_seed_override_and_csv_source(self, tmp_path):
        path = write_json(tmp_path/"scene.json", {"height": 4, "width": 4, "R": 2, "B": 10, "correlation_length": 1.0,
                                                  "seed": 1, "endmember_source": {"kind": "csv", "path": "lib.csv"}})
        config = load_scene_config(path, seed=9)
        assert config.seed == 9
        assert isinstance(config.endmember_source, CSVSource)


class TestScene:
    def test_composition(self):
        config = SceneConfig(height=20, width=20, R=3, B=30, correlation_length=2.0, snr_db=20.0, seed=4)
        scene = make_scene(config)
        np.testing.assert_array_equal(scene.Y_clean.data, scene.S_true.data @ scene.A_true.data)
        assert rmse(scene.A_true, scene.A_true) == 0
        assert msad(scene.S_true, scene.S_true) == pytest.approx(0, abs=1e-7)
        assert scene.realized_snr_db == pytest.approx(snr_db(scene.Y_clean, scene.Y_noisy))

    def test_component_seeds_differ(self):
        seeds = component_seeds(0)
        assert len(set(seeds)) == 3
        assert seeds == component_seeds(0)

    def test_library_band_mismatch(self, separated_library):
        config = SceneConfig(height=4, width=4, R=2, B=10, correlation_length=1.0,
                             endmember_source=CSVSource(path=str(separated_library)))
        with pytest.raises(ConfigError) as info:
            make_scene(config)
        assert info.value.field == "B"

    def test_directory_round_trip(self, tmp_path, small_scene):
        save_scene(small_scene, tmp_path/"scene")
        for name in SCENE_FILES:
            assert (tmp_path/"scene"/name).exists()
        np.testing.assert_array_equal(read_fmx(tmp_path/"scene"/"A_true.fmx"), small_scene.A_true.data)

        loaded = load_scene_dir(tmp_path/"scene")
        assert loaded.has_ground_truth
        assert loaded.Y.data.tobytes() == small_scene.Y_noisy.data.tobytes()
        assert loaded.S_true.data.tobytes() == small_scene.S_true.data.tobytes()
        with open(tmp_path/"scene"/"scene.json") as f:
            description = json.load(f)
        assert description["height"] == 8 and description["config"]["R"] == 3

    def test_observation_only_directory(self, tmp_path, small_scene):
        save_scene(small_scene, tmp_path/"scene")
        for name in ("Y_clean.fmx", "A_true.fmx", "S_true.fmx"):
            (tmp_path/"scene"/name).unlink()
        loaded = load_scene_dir(tmp_path/"scene")
        assert not loaded.has_ground_truth
        assert loaded.reference().Y_ref is loaded.Y
