"""Reduced run of the six-scenario augmentation experiment.

Scenario 0 trains the damage classifier on real windows only; scenarios
1-5 replace a growing share of real damaged windows with GAN-synthesized
ones. The question the full experiment answers: how much real damaged
data can synthetic data stand in for before detection quality drops?

This demo shrinks everything (short records, few epochs) so it finishes
in a few minutes; treat the printed metrics as a smoke test, not as the
experiment's answer.

Run: python3 demos/03_scenario_experiment.py
"""

import json
import tempfile

from vibrogan.cli import cmd_run_scenarios, load_run_config


def main():
    cfg = load_run_config(None, {
        "seed": 1,
        "window_len": 64,
        "surrogate": {"duration_s": 16.0},
        "gan": {"epochs": 10, "batch_size": 64},
        "classifier": {"epochs": 30},
        "scenarios": [
            {"id": k, "train_undamaged_real": 30,
             "train_damaged_real": 30 - synth, "train_damaged_synth": synth,
             "test_undamaged_real": 10, "test_damaged_real": 10}
            for k, synth in ((0, 0), (1, 20), (3, 10))
        ],
        "synthetic_count": 64,
    })

    out_dir = tempfile.mkdtemp(prefix="scenario_demo_")
    print(f"run directory: {out_dir}")
    reports = cmd_run_scenarios(cfg, out_dir, overwrite=True)

    print()
    print("scenario  synth/real damaged   MAE      CA     AP")
    for r in reports:
        c = r["counts"]
        print(f"   {r['scenario_id']}       {c['train_damaged_synth']:2d} / "
              f"{c['train_damaged_real']:2d}            "
              f"{r['mae']:.4f}  {r['classification_accuracy']:.3f}  "
              f"{r['average_precision']:.3f}")
    print()
    print(f"full reports: {out_dir}/reports/scenario_<k>.json")
    print(json.dumps(reports[0]["counts"], indent=2))


if __name__ == "__main__":
    main()
