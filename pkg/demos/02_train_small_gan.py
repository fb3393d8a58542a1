"""Train a reduced GAN on damaged surrogate windows and evaluate it.

Uses short 64-sample windows (3 conv stages instead of 5) so the whole
adversarial loop runs in a couple of minutes on a laptop CPU. Prints the
monitor FID trend plus the creativity and diversity diagnostics.

Run: python3 demos/02_train_small_gan.py
"""

import numpy as np

from vibrogan import (GanConfig, SurrogateParams, creativity_scores,
                      diversity_scores, generate, generate_surrogate_record,
                      normalize_windows, segment_record, train_gan)

WINDOW_LEN = 64
EPOCHS = 30


def main():
    record = generate_surrogate_record(SurrogateParams(duration_s=8.0, seed=3))
    pool = normalize_windows(segment_record(record, window_len=WINDOW_LEN))
    print(f"damaged pool: {len(pool)} windows of {WINDOW_LEN} samples")

    cfg = GanConfig(epochs=EPOCHS, seed=3)
    print(f"training {EPOCHS} epochs "
          f"({cfg.critic_iterations} critic steps per generator step)...")
    generator, gen_store, _, _, log = train_gan(
        cfg, pool,
        progress=lambda e: print(f"  epoch {e.epoch:3d}  fid {e.fid:.5f}  "
                                 f"critic {e.critic_loss:+.3f}")
        if e.epoch % 5 == 0 or e.epoch == 1 else None)

    fids = [e.fid for e in log.entries]
    print(f"monitor FID: {fids[0]:.5f} (epoch 1) -> {min(fids):.5f} (best)")

    synthetic = generate(generator, gen_store, len(pool), seed=11,
                         latent_channels=cfg.latent_channels)
    scores, duplicates = creativity_scores(synthetic, pool)
    print(f"creativity: max SSIM vs real {scores.max():.3f}, "
          f"{duplicates} duplicates above 0.8")
    div = diversity_scores(synthetic[:32])
    print(f"diversity: mean SSIM among generated {div.mean():.3f}")


if __name__ == "__main__":
    main()
