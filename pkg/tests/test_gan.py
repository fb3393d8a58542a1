import numpy as np
import pytest

from vibrogan import autodiff as ad
from vibrogan.autodiff import Tensor
from vibrogan.errors import InsufficientDataError, ShapeError
from vibrogan.gan import (GanConfig, TrainLog, TrainLogEntry, build_critic,
                          build_gan_models, build_generator, critic_loss,
                          generate, generate_from, generator_loss,
                          gradient_penalty, input_gradient, train_gan)
from vibrogan.layers import forward, init_params, output_length
from vibrogan.signal_core import Window

from test_autodiff import finite_diff


def small_cfg(**kw):
    base = dict(latent_channels=4, batch_size=8, epochs=2, critic_iterations=2,
                lambda_gp=20.0, seed=0)
    base.update(kw)
    return GanConfig(**base)


def damaged_pool(n, length, seed=0):
    rng = np.random.default_rng(seed)
    return [Window(samples=rng.uniform(-1, 1, size=length), condition="damaged",
                   normalized=True) for _ in range(n)]


class TestArchitecture:
    def test_full_scale_shapes(self):
        cfg = GanConfig()
        gen, critic = build_gan_models(1024, cfg)
        assert output_length(gen, 1) == 1024
        assert output_length(critic, 1024) == 1
        convs = [l for l in gen.layers if l.kind == "tconv1d"]
        assert [l.in_channels for l in convs] == [100, 256, 128, 64, 32]
        assert [l.out_channels for l in convs] == [256, 128, 64, 32, 1]
        assert all(l.kernel == 8 and l.stride == 4 and l.padding == 2 for l in convs)

    def test_critic_mirrors_generator(self):
        cfg = GanConfig()
        critic = build_critic(1024, cfg)
        convs = [l for l in critic.layers if l.kind == "conv1d"]
        assert [l.in_channels for l in convs] == [1, 32, 64, 128, 256]
        assert [l.out_channels for l in convs] == [32, 64, 128, 256, 1]
        kinds = [l.kind for l in critic.layers]
        assert "dropout" in kinds
        assert "sigmoid" not in kinds  # unbounded score
        assert kinds[-1] == "conv1d"

    def test_generator_ends_in_tanh(self):
        gen = build_generator(64, small_cfg())
        assert gen.layers[-1].kind == "tanh"

    def test_reduced_stack_depth(self):
        gen = build_generator(64, small_cfg())
        assert sum(l.kind == "tconv1d" for l in gen.layers) == 3

    def test_window_length_must_be_power_of_four(self):
        with pytest.raises(ShapeError):
            build_generator(100, small_cfg())

    def test_generator_output_in_range(self):
        cfg = small_cfg()
        gen = build_generator(64, cfg)
        store = init_params(gen, np.random.default_rng(1))
        out = generate_from(gen, store, 5, np.random.default_rng(2), cfg.latent_channels)
        assert out.shape == (5, 1, 64)
        assert np.all(np.abs(out) <= 1.0)


class TestConfig:
    def test_defaults_follow_training_recipe(self):
        cfg = GanConfig()
        assert cfg.lr_generator == 5e-6
        assert cfg.lr_critic == 2e-5
        assert cfg.critic_iterations == 12
        assert cfg.lambda_gp == 20.0
        assert cfg.batch_size == 1024
        assert cfg.latent_channels == 100
        assert cfg.dropout_p == 0.7

    def test_invalid_values_rejected(self):
        with pytest.raises(ValueError):
            GanConfig(critic_iterations=0)
        with pytest.raises(ValueError):
            GanConfig(gp_mode="everywhere")


class TestGradientPenalty:
    def test_zero_for_unit_gradient_critic(self):
        # a linear critic with ||w||_2 = 1 has input gradient norm exactly 1
        length = 16
        rng = np.random.default_rng(0)
        from vibrogan.layers import LayerSpec, NetworkSpec, ParamStore
        net = NetworkSpec([LayerSpec("conv1d", in_channels=1, out_channels=1,
                                     kernel=length, stride=1, padding=0)])
        w = np.full((1, 1, length), 1.0 / np.sqrt(length))
        store = ParamStore({"L0_weight": w, "L0_bias": np.zeros((1, 1, 1))})
        real = rng.uniform(-1, 1, size=(4, 1, length))
        fake = rng.uniform(-1, 1, size=(4, 1, length))
        pen = gradient_penalty(net, store, real, fake, 20.0, rng)
        assert pen.data == pytest.approx(0.0, abs=1e-12)

    def test_scales_with_lambda(self):
        from vibrogan.layers import LayerSpec, NetworkSpec, ParamStore
        length = 8
        net = NetworkSpec([LayerSpec("conv1d", in_channels=1, out_channels=1,
                                     kernel=length, stride=1, padding=0)])
        store = ParamStore({"L0_weight": np.full((1, 1, length), 0.5),
                            "L0_bias": np.zeros((1, 1, 1))})
        rng = np.random.default_rng(1)
        real = rng.uniform(size=(3, 1, length))
        fake = rng.uniform(size=(3, 1, length))
        p1 = gradient_penalty(net, store, real, fake, 1.0,
                              np.random.default_rng(2))
        p10 = gradient_penalty(net, store, real, fake, 10.0,
                               np.random.default_rng(2))
        assert p10.data == pytest.approx(10.0 * p1.data)
        # linear critic: gradient norm is ||w||_2 regardless of input
        expect = (np.sqrt(length * 0.25) - 1.0) ** 2
        assert p1.data == pytest.approx(expect, abs=1e-12)

    def test_batch_shape_mismatch_rejected(self):
        cfg = small_cfg()
        critic = build_critic(16, cfg)
        store = init_params(critic, np.random.default_rng(3))
        with pytest.raises(ShapeError):
            gradient_penalty(critic, store, np.zeros((2, 1, 16)),
                             np.zeros((3, 1, 16)), 20.0, np.random.default_rng(0))


class TestLossGradients:
    def test_critic_loss_parameter_gradients_match_finite_differences(self):
        cfg = small_cfg()
        critic = build_critic(16, cfg, with_dropout=False)
        store = init_params(critic, np.random.default_rng(4))
        rng_data = np.random.default_rng(5)
        real = rng_data.uniform(-1, 1, size=(3, 1, 16))
        fake = rng_data.uniform(-1, 1, size=(3, 1, 16))

        def loss_value(params_arrays):
            from vibrogan.layers import ParamStore
            st = ParamStore(params_arrays, store.buffers)
            return float(critic_loss(critic, st, real, fake, cfg.lambda_gp,
                                     np.random.default_rng(7)).data)

        leaves = store.leaf_tensors()
        loss = critic_loss(critic, store, real, fake, cfg.lambda_gp,
                           np.random.default_rng(7), params=leaves)
        name = "L0_weight"
        (g,) = ad.grad(loss, [leaves[name]])

        def f(v):
            arrays = {k: a.copy() for k, a in store.params.items()}
            arrays[name] = v
            return loss_value(arrays)

        fd = finite_diff(f, store.params[name], step=1e-6)
        np.testing.assert_allclose(g.data, fd, rtol=1e-3, atol=1e-7)

    def test_generator_loss_gradients_match_finite_differences(self):
        cfg = small_cfg()
        gen = build_generator(16, cfg)
        critic = build_critic(16, cfg, with_dropout=False)
        rng = np.random.default_rng(8)
        gen_store = init_params(gen, rng)
        critic_store = init_params(critic, rng)
        noise = np.random.default_rng(9).normal(size=(3, cfg.latent_channels, 1))

        name = "L0_weight"
        leaves = gen_store.leaf_tensors()
        loss = generator_loss(critic, critic_store, gen, gen_store, noise,
                              gen_params=leaves, net_mode="eval")
        (g,) = ad.grad(loss, [leaves[name]])

        def f(v):
            from vibrogan.layers import ParamStore
            arrays = {k: a.copy() for k, a in gen_store.params.items()}
            arrays[name] = v
            st = ParamStore(arrays, gen_store.buffers)
            return float(generator_loss(critic, critic_store, gen, st, noise,
                                        net_mode="eval").data)

        fd = finite_diff(f, gen_store.params[name], step=1e-5)
        np.testing.assert_allclose(g.data, fd, rtol=1e-4, atol=1e-8)

    def test_generator_loss_ignores_critic_parameters(self):
        cfg = small_cfg()
        gen = build_generator(16, cfg)
        critic = build_critic(16, cfg, with_dropout=False)
        rng = np.random.default_rng(10)
        gen_store = init_params(gen, rng)
        critic_store = init_params(critic, rng)
        noise = rng.normal(size=(2, cfg.latent_channels, 1))
        gen_leaves = gen_store.leaf_tensors()
        loss = generator_loss(critic, critic_store, gen, gen_store, noise,
                              gen_params=gen_leaves, net_mode="eval")
        assert all(not np.all(g.data == 0.0) or name.endswith("_beta")
                   for name, g in zip(gen_leaves,
                                      ad.grad(loss, list(gen_leaves.values()))))


class TestInputGradient:
    def test_matches_finite_differences(self):
        cfg = small_cfg()
        critic = build_critic(16, cfg, with_dropout=False)
        store = init_params(critic, np.random.default_rng(11))
        x = np.random.default_rng(12).uniform(-1, 1, size=(2, 1, 16))
        g, _ = input_gradient(critic, store, Tensor(x, requires_grad=True),
                              mode="eval", create_graph=False)

        def f(v):
            return float(forward(critic, store, Tensor(v), mode="eval").data.sum())

        np.testing.assert_allclose(g.data, finite_diff(f, x), rtol=1e-4, atol=1e-9)


class TestTraining:
    def test_empty_pool_rejected(self):
        with pytest.raises(InsufficientDataError):
            train_gan(small_cfg(), [])

    def test_short_run_returns_log_and_finite_losses(self):
        pool = damaged_pool(8, 16)
        gen, gen_store, critic, critic_store, log = train_gan(small_cfg(), pool)
        assert len(log.entries) == 2
        for e in log.entries:
            assert np.isfinite(e.critic_loss)
            assert np.isfinite(e.generator_loss)
            assert e.fid >= 0.0

    def test_deterministic_given_seed(self):
        pool = damaged_pool(8, 16)
        _, store_a, _, _, _ = train_gan(small_cfg(seed=3), pool)
        _, store_b, _, _, _ = train_gan(small_cfg(seed=3), pool)
        for name in store_a.params:
            np.testing.assert_array_equal(store_a.params[name], store_b.params[name])

    def test_checkpoints_written(self, tmp_path):
        pool = damaged_pool(8, 16)
        train_gan(small_cfg(epochs=2), pool, checkpoint_dir=str(tmp_path),
                  checkpoint_every=1)
        assert (tmp_path / "generator_epoch00001.ckpt").exists()
        assert (tmp_path / "generator_epoch00002.ckpt").exists()

    def test_instance_noise_decays_to_zero(self):
        from vibrogan.gan import _noise_sigma
        cfg = small_cfg(epochs=10, noise_sigma0=0.1)
        assert _noise_sigma(cfg, 1) == pytest.approx(0.09)
        assert _noise_sigma(cfg, 10) == 0.0
        assert _noise_sigma(cfg, 15) == 0.0


class TestGenerate:
    def test_windows_are_synthetic_damaged(self):
        cfg = small_cfg()
        gen = build_generator(16, cfg)
        store = init_params(gen, np.random.default_rng(13))
        wins = generate(gen, store, 4, seed=5, latent_channels=cfg.latent_channels)
        assert len(wins) == 4
        assert all(w.condition == "damaged" for w in wins)
        assert all(w.provenance == "synthetic" for w in wins)
        assert all(w.normalized for w in wins)

    def test_seeded_reproducibility(self):
        cfg = small_cfg()
        gen = build_generator(16, cfg)
        store = init_params(gen, np.random.default_rng(14))
        a = generate(gen, store, 3, seed=5, latent_channels=cfg.latent_channels)
        b = generate(gen, store, 3, seed=5, latent_channels=cfg.latent_channels)
        for wa, wb in zip(a, b):
            np.testing.assert_array_equal(wa.samples, wb.samples)


def test_train_log_csv(tmp_path):
    log = TrainLog([TrainLogEntry(1, 0.5, -0.25, 0.125, 1.0),
                    TrainLogEntry(2, 0.25, -0.5, 0.0625, 1.5)])
    path = tmp_path / "log.csv"
    log.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "epoch,critic_loss,generator_loss,fid,seconds"
    assert lines[1].startswith("1,0.5,-0.25,0.125,")
    assert len(lines) == 3
