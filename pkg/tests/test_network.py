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

import warnings

import numpy as np
import pytest
import torch
import torch.nn as nn

from HSICore.Errors import ConstraintError, DimensionError, NonFiniteGradientError
from HSICore.Images import AbundanceMatrix, EndmemberMatrix, HyperspectralImage
from HSICore.Mixing import lmm_mix
from Network.AutoEncoder import (AutoEncoder, decoder_forward, encoder_forward, farthest_point_pixels, image_tensor,
                                 init_params)
from Network.Encoder import EncoderSpec
from Network.Training import AdamState, adam_step, ae_loss, ae_loss_gradients, train_ae
from Network.utils import load_checkpoint, save_checkpoint

from conftest import TINY_HIDDEN, random_simplex

#central difference step
FD_STEP = 1e-7
#entries per block checked by finite differences
FD_SAMPLES = 12


def _constant_encoder(model : AutoEncoder):
    with torch.no_grad():
        for p in model.encoder.parameters():
            p.zero_()


class TestEncoder:
    def test_block_layout(self):
        spec = EncoderSpec(bands=20, n_endmembers=3)
        assert spec.block_widths() == [(20, 64, 3), (64, 32, 3), (32, 16, 1), (16, 6, 1), (6, 3, 1)]

    def test_output_on_simplex(self, tiny_spec, tiny_image):
        model = init_params(tiny_spec, tiny_image, 2, seed=0)
        A = encoder_forward(model, tiny_image)
        assert A.grid == (4, 4)
        assert np.all(A.data > 0)
        np.testing.assert_allclose(A.data.sum(axis=0), 1, atol=1e-12)

    def test_zero_input_zero_bias_gives_uniform(self, tiny_spec):
        model = init_params(tiny_spec, HyperspectralImage(np.eye(6, 16) + 0.1, 4, 4), 2, seed=1)
        zero = HyperspectralImage(np.zeros((6, 16)), 4, 4)
        np.testing.assert_allclose(encoder_forward(model, zero).data, 0.5, atol=1e-15)

    def test_band_mismatch(self, tiny_spec):
        model = AutoEncoder(tiny_spec)
        with pytest.raises(DimensionError):
            encoder_forward(model, HyperspectralImage(np.ones((5, 16)), 4, 4))

    def test_reproducible(self, tiny_spec, tiny_image):
        a = encoder_forward(init_params(tiny_spec, tiny_image, 2, seed=3), tiny_image)
        b = encoder_forward(init_params(tiny_spec, tiny_image, 2, seed=3), tiny_image)
        assert a.data.tobytes() == b.data.tobytes()

    def test_image_tensor_is_a_writable_copy(self, tiny_image):
        before = tiny_image.data.copy()
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            X = image_tensor(tiny_image)
        assert X.shape == (1, 6, 4, 4)
        X.fill_(0.0)
        np.testing.assert_array_equal(tiny_image.data, before)

    def test_decoder_shares_lmm(self, rng):
        S = EndmemberMatrix(rng.random((5, 3)) + 0.1)
        A = AbundanceMatrix(random_simplex(rng, 3, 6), 2, 3)
        assert decoder_forward(S, A).data.tobytes() == lmm_mix(S, A).data.tobytes()


class TestInit:
    def test_endmembers_are_pixels(self, tiny_spec, tiny_image):
        model = init_params(tiny_spec, tiny_image, 2, seed=0)
        S = model.endmembers.data
        for r in range(2):
            assert np.any(np.all(np.isclose(tiny_image.data, S[:, [r]], rtol=0, atol=0), axis=0))

    def test_same_seed_same_init(self, tiny_spec, tiny_image):
        a = init_params(tiny_spec, tiny_image, 2, seed=4).state_dict()
        b = init_params(tiny_spec, tiny_image, 2, seed=4).state_dict()
        for name in a:
            assert torch.equal(a[name], b[name])

    def test_biases_zero(self, tiny_spec, tiny_image):
        model = init_params(tiny_spec, tiny_image, 2, seed=0)
        for name, p in model.named_parameters():
            if name.endswith("bias"):
                assert torch.count_nonzero(p) == 0

    def test_finds_pure_pixels(self, rng):
        S = rng.random((8, 3)) + 0.1
        A = random_simplex(rng, 3, 40)
        A[:, [5, 17, 30]] = np.eye(3)
        Y = S @ A
        for seed in range(10):
            picks = farthest_point_pixels(Y, 3, seed)
            assert sorted(picks) == [5, 17, 30]

    def test_too_few_distinct_pixels(self, tiny_spec):
        Y = HyperspectralImage(np.ones((6, 16)), 4, 4)
        with pytest.raises(ConstraintError):
            init_params(tiny_spec, Y, 2, seed=0)


class TestLoss:
    def test_scalar_instance(self):
        #B=1, N=1, R=2; a zero encoder outputs E = (0.5, 0.5)
        model = AutoEncoder(EncoderSpec(bands=1, n_endmembers=2, hidden=(2, 2, 2)))
        _constant_encoder(model)
        with torch.no_grad():
            model.decoder.S.copy_(torch.tensor([[1.0, 0.0]], dtype=torch.float64))
        Y = HyperspectralImage([[1.0]], 1, 1)
        A = np.array([[0.75], [0.5]])
        G = np.zeros((2, 1))
        assert ae_loss(model, Y, A, G, 2.0) == pytest.approx(0.375, abs=1e-15)
        assert ae_loss(model, Y, A, G, 0.0) == pytest.approx(0.25, abs=1e-15)

    def test_exact_reconstruction_gives_zero(self, tiny_spec, rng):
        model = AutoEncoder(tiny_spec)
        _constant_encoder(model)
        S = rng.random((6, 2)) + 0.1
        with torch.no_grad():
            model.decoder.S.copy_(torch.from_numpy(S))
        Y = HyperspectralImage(S @ np.full((2, 16), 0.5), 4, 4)
        G = rng.normal(size=(2, 16))
        assert ae_loss(model, Y, np.zeros((2, 16)), G, 0.0) == pytest.approx(0.0, abs=1e-28)

    def test_shape_mismatch(self, tiny_spec, tiny_image):
        model = init_params(tiny_spec, tiny_image, 2, seed=0)
        with pytest.raises(DimensionError):
            ae_loss(model, tiny_image, np.zeros((2, 15)), np.zeros((2, 16)), 1.0)


class TestGradients:
    def _finite_differences(self, model, Y, A, G, mu, rng):
        errors = {}
        grads = ae_loss_gradients(model, Y, A, G, mu)
        for name, p in model.named_parameters():
            flat = p.data.view(-1)
            idx = rng.choice(flat.numel(), size=min(FD_SAMPLES, flat.numel()), replace=False)
            analytic = grads[name].reshape(-1)[idx]
            numeric = np.empty(len(idx))
            for i, j in enumerate(idx):
                original = float(flat[j])
                flat[j] = original + FD_STEP
                up = ae_loss(model, Y, A, G, mu)
                flat[j] = original - FD_STEP
                down = ae_loss(model, Y, A, G, mu)
                flat[j] = original
                numeric[i] = (up - down)/(2*FD_STEP)
            scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-8)
            errors[name] = np.linalg.norm(analytic - numeric)/scale
        return errors

    def test_match_finite_differences(self, tiny_spec, tiny_image):
        for seed in range(20):
            rng = np.random.default_rng(seed)
            model = init_params(tiny_spec, tiny_image, 2, seed=seed)
            with torch.no_grad():
                for p in model.parameters():
                    p.add_(0.1*torch.from_numpy(rng.normal(size=tuple(p.shape))))
            A = random_simplex(rng, 2, 16)
            G = 0.1*rng.normal(size=(2, 16))
            errors = self._finite_differences(model, tiny_image, A, G, 0.7, rng)
            assert max(errors.values()) < 1e-4, errors

    def test_vanish_at_exact_minimum(self, tiny_spec, rng):
        model = AutoEncoder(tiny_spec)
        _constant_encoder(model)
        S = rng.random((6, 2)) + 0.1
        with torch.no_grad():
            model.decoder.S.copy_(torch.from_numpy(S))
        E = np.full((2, 16), 0.5)
        Y = HyperspectralImage(S @ E, 4, 4)
        G = 0.2*rng.normal(size=(2, 16))
        grads = ae_loss_gradients(model, Y, E + G, G, 1.5)
        for name, g in grads.items():
            assert np.max(np.abs(g)) < 1e-8, name

    def test_penalty_does_not_touch_endmembers(self, tiny_spec, tiny_image, rng):
        model = init_params(tiny_spec, tiny_image, 2, seed=0)
        A = random_simplex(rng, 2, 16)
        G = rng.normal(size=(2, 16))
        with_penalty = ae_loss_gradients(model, tiny_image, A, G, 2.0)["decoder.S"]
        without = ae_loss_gradients(model, tiny_image, A, G, 0.0)["decoder.S"]
        np.testing.assert_allclose(with_penalty, without, rtol=0, atol=1e-14)


class _Scalar(nn.Module):
    def __init__(self):
        super().__init__()
        self.w = nn.Parameter(torch.tensor(0.5, dtype=torch.float64))


class TestAdam:
    def test_zero_gradient_keeps_params(self, tiny_spec, tiny_image):
        model = init_params(tiny_spec, tiny_image, 2, seed=0)
        before = {k: v.clone() for k, v in model.state_dict().items()}
        state = AdamState(model)
        grads = {name: np.zeros(tuple(p.shape)) for name, p in model.named_parameters()}
        adam_step(model, grads, state)
        assert state.step_count == 1
        for name, value in model.state_dict().items():
            assert torch.equal(value, before[name])

    def test_first_step_moves_by_lr(self):
        model = _Scalar()
        state = AdamState(model, lr=1e-3)
        adam_step(model, {"w": np.array(1.0)}, state)
        assert float(model.w) == pytest.approx(0.5 - 1e-3, abs=1e-10)

    def test_endmembers_stay_nonnegative(self, tiny_spec, tiny_image, rng):
        model = init_params(tiny_spec, tiny_image, 2, seed=0)
        state = AdamState(model, lr=1.0, lr_decoder=1.0)
        for _ in range(20):
            adam_step(model, {"decoder.S": np.abs(rng.normal(size=(6, 2)))}, state)
            assert float(model.decoder.S.min()) >= 0

    def test_non_finite_gradient_named(self, tiny_spec, tiny_image):
        model = init_params(tiny_spec, tiny_image, 2, seed=0)
        g = np.zeros((6, 2))
        g[0, 0] = np.inf
        with pytest.raises(NonFiniteGradientError) as info:
            adam_step(model, {"decoder.S": g}, AdamState(model))
        assert info.value.block == "decoder.S"

    def test_decoder_learning_rate(self, tiny_spec):
        state = AdamState(AutoEncoder(tiny_spec), lr=1e-3, lr_decoder=1e-4)
        rates = {g["name"]: g["lr"] for g in state.optimizer.param_groups}
        assert rates == {"main": 1e-3, "decoder": 1e-4}


class TestTraining:
    def test_zero_epochs_rejected(self, tiny_spec, tiny_image):
        model = init_params(tiny_spec, tiny_image, 2, seed=0)
        with pytest.raises(ConstraintError):
            train_ae(model, tiny_image, np.zeros((2, 16)), np.zeros((2, 16)), 0.1, epochs=0)

    def test_loss_mostly_decreasing(self, smoke_image):
        Y, _, _ = smoke_image
        model = init_params(EncoderSpec(bands=10, n_endmembers=3), Y, 3, seed=0)
        zeros = np.zeros((3, Y.n_pixels))
        _, losses = train_ae(model, Y, zeros, zeros, 0.0, epochs=200, lr=1e-3, seed=0)
        assert len(losses) == 200
        steps = np.diff(losses)
        assert np.mean(steps <= 0) >= 0.95
        assert losses[-1] < losses[0]

    def test_endmembers_nonnegative_after_training(self, smoke_image):
        Y, _, _ = smoke_image
        model = init_params(EncoderSpec(bands=10, n_endmembers=3, hidden=TINY_HIDDEN), Y, 3, seed=1)
        zeros = np.zeros((3, Y.n_pixels))
        train_ae(model, Y, zeros, zeros, 0.0, epochs=30, lr=1e-2, lr_decoder=1e-2)
        assert float(model.decoder.S.min()) >= 0

    def test_bypass_converges_to_least_squares(self, smoke_image, rng):
        Y, A_true, S_true = smoke_image
        model = AutoEncoder(EncoderSpec(bands=10, n_endmembers=3, hidden=TINY_HIDDEN))
        S0 = rng.random((10, 3)) + 0.1
        with torch.no_grad():
            model.decoder.S.copy_(torch.from_numpy(S0))
        zeros = np.zeros((3, Y.n_pixels))
        _, losses = train_ae(model, Y, zeros, zeros, 0.0, epochs=3000, lr=1e-2, lr_decoder=1e-2,
                             bypass_abundances=A_true.data)

        least_squares = np.linalg.lstsq(A_true.data.T, Y.data.T, rcond=None)[0].T
        target = np.maximum(least_squares, 0)
        S = model.endmembers.data
        assert np.max(np.abs(S - target)) < 0.02
        assert np.linalg.norm(S - target) < 0.1*np.linalg.norm(S0 - target)

    def test_warm_start_continues_optimizer(self, tiny_spec, tiny_image):
        model = init_params(tiny_spec, tiny_image, 2, seed=0)
        state = AdamState(model)
        zeros = np.zeros((2, 16))
        train_ae(model, tiny_image, zeros, zeros, 0.0, epochs=3, state=state)
        train_ae(model, tiny_image, zeros, zeros, 0.0, epochs=2, state=state)
        assert state.step_count == 5
        assert len(state.moments()) == len(list(model.parameters()))


class TestCheckpoints:
    def test_round_trip(self, tmp_path, tiny_spec, tiny_image):
        model = init_params(tiny_spec, tiny_image, 2, seed=2)
        save_checkpoint(model, tmp_path/"ckpt", step=7)
        loaded, step = load_checkpoint(tmp_path/"ckpt")
        assert step == 7
        assert loaded.spec == tiny_spec
        assert encoder_forward(loaded, tiny_image).data.tobytes() == encoder_forward(model, tiny_image).data.tobytes()
