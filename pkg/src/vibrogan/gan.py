"""1-D WGAN-GP for acceleration windows: models, losses, training loop.

The generator upsamples a latent vector through transposed convolutions
(x4 per stage) to a Tanh-bounded window; the critic mirrors it with
strided convolutions down to one unbounded score per window. The critic
objective is the Wasserstein estimate plus the gradient penalty; the
penalty's parameter gradients need a differentiable input gradient, which
the autodiff engine provides via ``create_graph``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, asdict

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import DivergedError, InsufficientDataError, ShapeError
from .gan_eval import fid, pooled_summary
from .layers import (LayerSpec, NetworkSpec, forward, init_params,
                     save_checkpoint)
from .optim import AdamW
from .signal_core import DAMAGED, Window

KERNEL, STRIDE, PADDING = 8, 4, 2


@dataclass
class GanConfig:
    lr_generator: float = 5e-6
    lr_critic: float = 2e-5
    critic_iterations: int = 12
    lambda_gp: float = 20.0
    batch_size: int = 1024
    epochs: int = 600
    latent_channels: int = 100
    noise_sigma0: float = 0.1
    noise_decay: str = "linear_to_zero"
    gp_mode: str = "interpolated"
    seed: int = 0
    dropout_p: float = 0.7
    leaky_slope: float = 0.2
    weight_decay: float = 1e-2

    def __post_init__(self):
        if self.lr_generator <= 0 or self.lr_critic <= 0:
            raise ValueError("learning rates must be positive")
        if self.critic_iterations < 1:
            raise ValueError("critic_iterations must be >= 1")
        if self.lambda_gp < 0:
            raise ValueError("lambda_gp must be non-negative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.gp_mode not in ("interpolated", "at_generated"):
            raise ValueError("gp_mode must be 'interpolated' or 'at_generated'")
        if self.noise_decay != "linear_to_zero":
            raise ValueError("only linear_to_zero noise decay is supported")


@dataclass
class TrainLogEntry:
    epoch: int
    critic_loss: float
    generator_loss: float
    fid: float
    seconds: float


@dataclass
class TrainLog:
    entries: list[TrainLogEntry] = field(default_factory=list)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write("epoch,critic_loss,generator_loss,fid,seconds\n")
            for e in self.entries:
                fh.write(f"{e.epoch},{e.critic_loss:.17g},{e.generator_loss:.17g},"
                         f"{e.fid:.17g},{e.seconds:.3f}\n")


def _stage_count(window_len):
    stages = max(1, int(round(np.log(window_len) / np.log(4))))
    if 4 ** stages != window_len:
        raise ShapeError(f"window length {window_len} is not a power of 4")
    return stages


def _channel_ladder(stages):
    # five stages -> 256, 128, 64, 32 hidden channels; shorter stacks
    # drop the widest ends but keep the final 32-channel stage
    return [32 * 2 ** (stages - 1 - i) for i in range(1, stages)]


def build_generator(window_len, cfg):
    stages = _stage_count(window_len)
    channels = [cfg.latent_channels] + _channel_ladder(stages) + [1]
    layers = []
    for i in range(stages):
        layers.append(LayerSpec("tconv1d", in_channels=channels[i],
                                out_channels=channels[i + 1],
                                kernel=KERNEL, stride=STRIDE, padding=PADDING))
        if i < stages - 1:
            layers.append(LayerSpec("batch_norm", channels=channels[i + 1]))
            layers.append(LayerSpec("relu"))
    layers.append(LayerSpec("tanh"))
    return NetworkSpec(layers)


def build_critic(window_len, cfg, with_dropout=True):
    stages = _stage_count(window_len)
    channels = [1] + list(reversed(_channel_ladder(stages))) + [1]
    dropout_after = min(3, stages - 1)
    layers = []
    for i in range(stages):
        layers.append(LayerSpec("conv1d", in_channels=channels[i],
                                out_channels=channels[i + 1],
                                kernel=KERNEL, stride=STRIDE, padding=PADDING))
        if i < stages - 1:
            layers.append(LayerSpec("instance_norm", channels=channels[i + 1]))
            layers.append(LayerSpec("leaky_relu", slope=cfg.leaky_slope))
            if with_dropout and i + 1 == dropout_after:
                layers.append(LayerSpec("dropout", p=cfg.dropout_p))
    return NetworkSpec(layers)


def build_gan_models(window_len, cfg):
    """(generator, critic) NetworkSpecs for the given window length."""
    return build_generator(window_len, cfg), build_critic(window_len, cfg)


# -- losses --------------------------------------------------------------

def input_gradient(net, store, x, mode="train", rng=None, params=None,
                   create_graph=True):
    """d(sum of scores)/dx; each batch element's score depends only on its
    own input, so this is the per-element input gradient."""
    x_t = x if isinstance(x, Tensor) else Tensor(x, requires_grad=True)
    out = forward(net, store, x_t, mode=mode, rng=rng, params=params)
    total = ad.tsum(out)
    (g,) = ad.grad(total, [x_t], create_graph=create_graph)
    return g, x_t


def gradient_penalty(critic, store, real, fake, lambda_gp, rng,
                     params=None, gp_mode="interpolated", net_mode="train"):
    """lambda * mean((||grad_x critic(x_hat)||_2 - 1)^2) as a Tensor.

    x_hat is the per-element uniform interpolation of real and fake
    (or the fake sample itself in at_generated mode). The result stays
    differentiable with respect to the critic parameters in ``params``.
    """
    real = np.asarray(real, dtype=np.float64)
    fake = np.asarray(fake, dtype=np.float64)
    if real.shape != fake.shape:
        raise ShapeError(f"batch shapes differ: {real.shape} vs {fake.shape}")
    if real.shape[0] == 0:
        raise ValueError("gradient penalty needs a non-empty batch")
    if gp_mode == "interpolated":
        eps = rng.uniform(size=(real.shape[0], 1, 1))
        x_hat = eps * real + (1.0 - eps) * fake
    else:
        x_hat = fake
    g, _ = input_gradient(critic, store, Tensor(x_hat, requires_grad=True),
                          mode=net_mode, rng=rng, params=params)
    norm = ad.sqrt(ad.tsum(g * g, axis=(1, 2)))
    return Tensor(lambda_gp) * ad.tmean((norm - 1.0) ** 2)


def critic_loss(critic, store, real, fake, lambda_gp, rng, params=None,
                gp_mode="interpolated", net_mode="train"):
    """mean C(fake) - mean C(real) + gradient penalty.

    Minimizing this maximizes the Wasserstein estimate mean C(real) -
    mean C(fake), the standard critic orientation.
    """
    pen = gradient_penalty(critic, store, real, fake, lambda_gp, rng,
                           params=params, gp_mode=gp_mode, net_mode=net_mode)
    out_real = forward(critic, store, Tensor(np.asarray(real)), mode=net_mode,
                       rng=rng, params=params)
    out_fake = forward(critic, store, Tensor(np.asarray(fake)), mode=net_mode,
                       rng=rng, params=params)
    return ad.tmean(out_fake) - ad.tmean(out_real) + pen


def generator_loss(critic, critic_store, generator, gen_store, noise,
                   gen_params=None, rng=None, noise_sigma=0.0, net_mode="train"):
    """-mean C(G(z)); gradients flow into the generator only."""
    z = Tensor(np.asarray(noise, dtype=np.float64))
    fake = forward(generator, gen_store, z, mode=net_mode, rng=rng, params=gen_params)
    if noise_sigma > 0.0:
        fake = fake + Tensor(rng.normal(0.0, noise_sigma, size=fake.shape))
    score = forward(critic, critic_store, fake, mode=net_mode, rng=rng)
    return ad.neg(ad.tmean(score))


# -- training ------------------------------------------------------------

def _windows_to_batch(windows):
    return np.stack([w.samples for w in windows])[:, None, :]


def _noise_sigma(cfg, epoch):
    return cfg.noise_sigma0 * max(0.0, 1.0 - epoch / cfg.epochs)


def generate_from(generator, store, n, rng, latent_channels):
    """Raw generated batch (n, 1, L) in eval mode."""
    if n == 0:
        return np.empty((0, 1, 0))
    z = rng.normal(size=(n, latent_channels, 1))
    out = forward(generator, store, Tensor(z), mode="eval")
    return out.data


def generate(generator, store, n, seed, latent_channels=100):
    """Draw n synthetic damaged windows from a trained generator."""
    rng = np.random.default_rng(seed)
    batch = generate_from(generator, store, n, rng, latent_channels)
    return [Window(samples=batch[i, 0], condition=DAMAGED, provenance="synthetic",
                   normalized=True, source_index=-1) for i in range(n)]


def train_gan(cfg, damaged_windows, real_eval_batch=None, checkpoint_dir=None,
              checkpoint_every=0, progress=None):
    """Adversarial training on a pool of normalized damaged windows.

    Per minibatch: ``critic_iterations`` critic AdamW steps, then one
    generator step. Gaussian instance noise with a linearly decaying sigma
    is added to every critic input. Returns (generator, gen_store, critic,
    critic_store, TrainLog).
    """
    if not damaged_windows:
        raise InsufficientDataError("GAN training needs a non-empty damaged pool")
    data = _windows_to_batch(damaged_windows)
    n_data, _, window_len = data.shape
    if real_eval_batch is None:
        real_eval = data
    else:
        real_eval = np.asarray(real_eval_batch, dtype=np.float64)

    generator, critic = build_gan_models(window_len, cfg)
    rng = np.random.default_rng(cfg.seed)
    gen_store = init_params(generator, rng)
    critic_store = init_params(critic, rng)
    opt_g = AdamW(cfg.lr_generator, weight_decay=cfg.weight_decay)
    opt_c = AdamW(cfg.lr_critic, weight_decay=cfg.weight_decay)

    batch_size = min(cfg.batch_size, n_data)
    log = TrainLog()
    for epoch in range(1, cfg.epochs + 1):
        t0 = time.perf_counter()
        sigma = _noise_sigma(cfg, epoch)
        order = rng.permutation(n_data)
        c_losses, g_losses = [], []
        for start in range(0, n_data, batch_size):
            real = data[order[start:start + batch_size]]
            bsz = real.shape[0]
            for _ in range(cfg.critic_iterations):
                z = rng.normal(size=(bsz, cfg.latent_channels, 1))
                fake = forward(generator, gen_store, Tensor(z), mode="train",
                               rng=rng).data
                noisy_real = real + rng.normal(0.0, sigma, size=real.shape) if sigma else real
                noisy_fake = fake + rng.normal(0.0, sigma, size=fake.shape) if sigma else fake
                leaves = critic_store.leaf_tensors()
                loss = critic_loss(critic, critic_store, noisy_real, noisy_fake,
                                   cfg.lambda_gp, rng, params=leaves,
                                   gp_mode=cfg.gp_mode)
                if not np.isfinite(loss.data):
                    raise DivergedError(epoch, f"critic loss diverged at epoch {epoch}")
                names = list(leaves)
                grads = ad.grad(loss, [leaves[n] for n in names])
                opt_c.step(critic_store.params, {n: g.data for n, g in zip(names, grads)})
                c_losses.append(loss.item())
            z = rng.normal(size=(bsz, cfg.latent_channels, 1))
            gen_leaves = gen_store.leaf_tensors()
            g_loss = generator_loss(critic, critic_store, generator, gen_store, z,
                                    gen_params=gen_leaves, rng=rng, noise_sigma=sigma)
            if not np.isfinite(g_loss.data):
                raise DivergedError(epoch, f"generator loss diverged at epoch {epoch}")
            names = list(gen_leaves)
            grads = ad.grad(g_loss, [gen_leaves[n] for n in names])
            opt_g.step(gen_store.params, {n: g.data for n, g in zip(names, grads)})
            g_losses.append(g_loss.item())

        monitor = generate_from(generator, gen_store, real_eval.shape[0], rng,
                                cfg.latent_channels)
        epoch_fid = fid(pooled_summary(monitor[:, 0, :]),
                        pooled_summary(real_eval[:, 0, :]))
        entry = TrainLogEntry(epoch=epoch,
                              critic_loss=float(np.mean(c_losses)),
                              generator_loss=float(np.mean(g_losses)),
                              fid=float(epoch_fid),
                              seconds=time.perf_counter() - t0)
        log.entries.append(entry)
        if progress:
            progress(entry)
        if checkpoint_dir and checkpoint_every and (
                epoch % checkpoint_every == 0 or epoch == cfg.epochs):
            meta = {"epoch": epoch, "fid": entry.fid, "config": asdict(cfg)}
            save_checkpoint(f"{checkpoint_dir}/generator_epoch{epoch:05d}.ckpt",
                            generator, gen_store, kind="generator", meta=meta)
    return generator, gen_store, critic, critic_store, log
