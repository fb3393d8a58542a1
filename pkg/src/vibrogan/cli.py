"""Command-line orchestration for the full augmentation experiment.

Subcommands: surrogate, train-gan, generate, eval-gan, run-scenarios,
report. A run directory holds `config.snapshot`, `checkpoints/`,
`logs/gan_train.csv`, `eval/`, `reports/scenario_<k>.json`, and `plots/`.
Per-stage seeds derive from the master seed plus a stage tag, so stages
re-run independently without disturbing each other's randomness.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys

import numpy as np

from . import gan_eval, metrics, signal_core
from .classifier import (ClassifierConfig, default_learning_rate, predict,
                         train_classifier)
from .errors import MissingSyntheticError
from .gan import GanConfig, generate, train_gan
from .layers import load_checkpoint, save_checkpoint
from .signal_core import (DAMAGED, UNDAMAGED, SurrogateParams,
                          default_scenarios, ScenarioSpec)


def stage_seed(master, tag):
    """Deterministic per-stage seed from the master seed and a stage name."""
    digest = hashlib.blake2b(f"{master}:{tag}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


# -- deterministic JSON with 17-significant-digit floats ------------------

def _json_value(v, indent, level):
    pad = " " * (indent * (level + 1))
    close = " " * (indent * level)
    if isinstance(v, dict):
        if not v:
            return "{}"
        items = [f'{pad}"{k}": {_json_value(v[k], indent, level + 1)}' for k in v]
        return "{\n" + ",\n".join(items) + "\n" + close + "}"
    if isinstance(v, (list, tuple)):
        if not v:
            return "[]"
        items = [f"{pad}{_json_value(x, indent, level + 1)}" for x in v]
        return "[\n" + ",\n".join(items) + "\n" + close + "]"
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return "null"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return json.dumps(str(v))


def dump_json(obj, path, indent=2):
    with open(path, "w") as fh:
        fh.write(_json_value(obj, indent, 0))
        fh.write("\n")


# -- run configuration ----------------------------------------------------

def load_run_config(path=None, overrides=None):
    """Merge config file contents over defaults; `overrides` wins last."""
    cfg = {
        "seed": 0,
        "window_len": signal_core.DEFAULT_WINDOW_LEN,
        "surrogate": {},
        "records": None,
        # desk-scale GAN defaults; the full-scale run (600 epochs, batch
        # 1024) is the GanConfig default and can be requested explicitly
        "gan": {"epochs": 30},
        "classifier": {},
        "scenarios": None,
        "generator_checkpoint": None,
        "synthetic_count": 256,
        "checkpoint_every": 0,
    }
    if path:
        with open(path) as fh:
            cfg.update(json.load(fh))
    if overrides:
        cfg.update({k: v for k, v in overrides.items() if v is not None})
    return cfg


def _scenarios_from_config(cfg):
    if cfg.get("scenarios"):
        return [ScenarioSpec(**s) for s in cfg["scenarios"]]
    return default_scenarios()


def _config_hash(cfg):
    return hashlib.sha256(
        json.dumps(cfg, sort_keys=True, default=str).encode()).hexdigest()[:16]


def _prepare_dir(path, overwrite):
    if os.path.isdir(path) and os.listdir(path) and not overwrite:
        raise FileExistsError(f"{path} exists and is not empty; pass --overwrite")
    os.makedirs(path, exist_ok=True)
    for sub in ("checkpoints", "logs", "eval", "reports", "plots"):
        os.makedirs(os.path.join(path, sub), exist_ok=True)


def _surrogate_records(cfg):
    base = dict(cfg.get("surrogate") or {})
    base.setdefault("rate", 1024.0)
    master = cfg["seed"]
    undamaged = signal_core.generate_surrogate_record(
        SurrogateParams(**{**base, "seed": stage_seed(master, "surrogate-undamaged")}),
        condition=UNDAMAGED)
    damaged = signal_core.generate_surrogate_record(
        SurrogateParams(**{**base, "seed": stage_seed(master, "surrogate-damaged")}),
        condition=DAMAGED)
    return undamaged, damaged


def _load_records(cfg):
    rec = cfg["records"]
    rate = rec.get("rate", 1024.0)
    undamaged = signal_core.load_record(rec["undamaged"], rate, UNDAMAGED)
    damaged = signal_core.load_record(rec["damaged"], rate, DAMAGED)
    return undamaged, damaged


def _window_pools(cfg):
    if cfg.get("records"):
        undamaged, damaged = _load_records(cfg)
    else:
        undamaged, damaged = _surrogate_records(cfg)
    length = cfg["window_len"]
    u_pool = signal_core.normalize_windows(signal_core.segment_record(undamaged, length))
    d_pool = signal_core.normalize_windows(signal_core.segment_record(damaged, length))
    return u_pool, d_pool


def _gan_config(cfg, seed):
    return GanConfig(**{**(cfg.get("gan") or {}), "seed": seed})


def _train_or_load_generator(cfg, d_pool, out_dir):
    """Returns (generator, store, latent_channels); trains when needed."""
    if cfg.get("generator_checkpoint"):
        net, store, kind, meta = load_checkpoint(cfg["generator_checkpoint"])
        if kind != "generator":
            raise ValueError(f"checkpoint kind {kind!r} is not a generator")
        latent = meta.get("config", {}).get("latent_channels", 100)
        return net, store, latent
    gan_cfg = _gan_config(cfg, stage_seed(cfg["seed"], "gan"))
    ckpt_dir = os.path.join(out_dir, "checkpoints") if out_dir else None
    generator, gen_store, _, _, log = train_gan(
        gan_cfg, d_pool, checkpoint_dir=ckpt_dir,
        checkpoint_every=cfg.get("checkpoint_every", 0))
    if out_dir:
        log.to_csv(os.path.join(out_dir, "logs", "gan_train.csv"))
        save_checkpoint(os.path.join(out_dir, "checkpoints", "generator_final.ckpt"),
                        generator, gen_store, kind="generator",
                        meta={"epoch": gan_cfg.epochs, "config": dataclasses.asdict(gan_cfg),
                              "fid": log.entries[-1].fid if log.entries else None})
    return generator, gen_store, gan_cfg.latent_channels


# -- scenario experiment ---------------------------------------------------

def scenario_report(spec, prediction, seed, config_hash):
    return {
        "scenario_id": spec.id,
        "counts": {
            "train_undamaged_real": spec.train_undamaged_real,
            "train_damaged_real": spec.train_damaged_real,
            "train_damaged_synth": spec.train_damaged_synth,
            "test_undamaged_real": spec.test_undamaged_real,
            "test_damaged_real": spec.test_damaged_real,
        },
        "mae": metrics.mae(prediction),
        "classification_accuracy": metrics.classification_accuracy(prediction),
        "average_precision": metrics.average_precision(prediction),
        "threshold": prediction.threshold,
        "entries": [
            {"index": i, "score": float(s), "label": int(l)}
            for i, (s, l) in enumerate(zip(prediction.scores, prediction.labels))
        ],
        "seed": seed,
        "config_hash": config_hash,
    }


def cmd_run_scenarios(cfg, out_dir, overwrite=False):
    """Full pipeline: data, GAN (or checkpoint), augmentation, six
    classifier trainings, metrics, and persisted reports."""
    _prepare_dir(out_dir, overwrite)
    scenarios = _scenarios_from_config(cfg)
    master = cfg["seed"]
    cfg_hash = _config_hash(cfg)
    dump_json(cfg, os.path.join(out_dir, "config.snapshot"))

    u_pool, d_pool = _window_pools(cfg)
    needs_synth = any(s.train_damaged_synth > 0 for s in scenarios)
    if needs_synth and not cfg.get("generator_checkpoint") and cfg.get("gan") is None:
        raise MissingSyntheticError(
            "scenarios 1-5 need synthetic windows; provide a generator "
            "checkpoint or enable GAN training")
    synth_pool = []
    if needs_synth:
        generator, gen_store, latent = _train_or_load_generator(cfg, d_pool, out_dir)
        synth_pool = generate(generator, gen_store, cfg["synthetic_count"],
                              stage_seed(master, "generate"), latent_channels=latent)

    split_seed = stage_seed(master, "split") % (2 ** 63)
    reports = []
    for spec in scenarios:
        train_set, test_set = signal_core.assemble_scenario(
            u_pool, d_pool, synth_pool, spec, split_seed)
        clf_overrides = dict(cfg.get("classifier") or {})
        clf_overrides.setdefault("learning_rate", default_learning_rate(spec.id))
        clf_cfg = ClassifierConfig(**{**clf_overrides,
                                      "seed": stage_seed(master, f"classifier-{spec.id}")})
        net, store, history = train_classifier(clf_cfg, train_set,
                                               window_len=cfg["window_len"])
        prediction = predict(net, store, test_set)
        report = scenario_report(spec, prediction, master, cfg_hash)
        reports.append(report)
        dump_json(report, os.path.join(out_dir, "reports", f"scenario_{spec.id}.json"))
        with open(os.path.join(out_dir, "plots",
                               f"scenario_{spec.id}_predictions.csv"), "w") as fh:
            fh.write("index,score,label\n")
            for e in report["entries"]:
                fh.write(f"{e['index']},{e['score']:.17g},{e['label']}\n")
        with open(os.path.join(out_dir, "logs",
                               f"classifier_{spec.id}_loss.csv"), "w") as fh:
            fh.write("epoch,loss\n")
            for i, loss in enumerate(history, start=1):
                fh.write(f"{i},{loss:.17g}\n")
    return reports


def cmd_eval_gan(checkpoint_path, real_windows, out_dir, seed=0,
                 pairing="one_to_one", pdf_bins=20):
    """Generate a matched synthetic set and emit the diagnostic bundle."""
    os.makedirs(out_dir, exist_ok=True)
    net, store, kind, meta = load_checkpoint(checkpoint_path)
    if kind != "generator":
        raise ValueError(f"checkpoint kind {kind!r} is not a generator")
    latent = meta.get("config", {}).get("latent_channels", 100)
    generated = generate(net, store, len(real_windows), stage_seed(seed, "eval-generate"),
                         latent_channels=latent)

    params = gan_eval.SsimParams()
    g_sum = [gan_eval.gaussian_summary(w) for w in generated]
    r_sum = [gan_eval.gaussian_summary(w) for w in real_windows]
    if pairing == "one_to_one":
        perm = np.random.default_rng(stage_seed(seed, "eval-pairing")).permutation(len(r_sum))
        pairs = list(enumerate(perm))
    else:
        pairs = [(i, j) for i in range(len(g_sum)) for j in range(len(r_sum))]
    fid_vals = np.array([gan_eval.fid(g_sum[i], r_sum[j]) for i, j in pairs])
    creativity, duplicates = gan_eval.creativity_scores(generated, real_windows, params)
    diversity = gan_eval.diversity_scores(generated, params)

    def write_scores(name, values):
        with open(os.path.join(out_dir, name), "w") as fh:
            fh.write("value\n")
            for v in values:
                fh.write(f"{v:.17g}\n")

    def write_pdf(name, values):
        centers, density = gan_eval.pdf_estimate(values, pdf_bins)
        with open(os.path.join(out_dir, name), "w") as fh:
            fh.write("bin_center,density\n")
            for c, d in zip(centers, density):
                fh.write(f"{c:.17g},{d:.17g}\n")

    write_scores("fid_scores.csv", fid_vals)
    write_pdf("fid_pdf.csv", fid_vals)
    write_scores("creativity_scores.csv", creativity)
    write_pdf("creativity_pdf.csv", creativity)
    write_scores("diversity_scores.csv", diversity)
    write_pdf("diversity_pdf.csv", diversity)

    lo_pair = pairs[int(np.argmin(fid_vals))]
    hi_pair = pairs[int(np.argmax(fid_vals))]
    with open(os.path.join(out_dir, "boxplots.csv"), "w") as fh:
        fh.write("pair,role,min,q1,median,q3,max,whisker_lo,whisker_hi,mean\n")
        for tag, (gi, ri) in (("lowest_fid", lo_pair), ("highest_fid", hi_pair)):
            for role, window in (("generated", generated[gi]), ("real", real_windows[ri])):
                s = gan_eval.boxplot_stats(window)
                fh.write(f"{tag},{role}," + ",".join(
                    f"{s[k]:.17g}" for k in ("min", "q1", "median", "q3", "max",
                                             "whisker_lo", "whisker_hi", "mean")) + "\n")
    summary = {
        "n_generated": len(generated),
        "n_real": len(real_windows),
        "pairing": pairing,
        "fid_min": float(fid_vals.min()),
        "fid_max": float(fid_vals.max()),
        "fid_mean": float(fid_vals.mean()),
        "duplicate_count": duplicates,
        "duplicate_threshold": params.duplicate_threshold,
    }
    dump_json(summary, os.path.join(out_dir, "summary.json"))
    return summary


def cmd_report(run_dir):
    """Cross-scenario MAE/CA/AP summary with deltas against scenario 0."""
    reports_dir = os.path.join(run_dir, "reports")
    names = sorted(n for n in os.listdir(reports_dir)
                   if n.startswith("scenario_") and n.endswith(".json")) \
        if os.path.isdir(reports_dir) else []
    if not names:
        raise FileNotFoundError(f"no scenario reports under {reports_dir}")
    rows = []
    for name in names:
        with open(os.path.join(reports_dir, name)) as fh:
            rows.append(json.load(fh))
    rows.sort(key=lambda r: r["scenario_id"])
    base = next((r for r in rows if r["scenario_id"] == 0), rows[0])
    out_path = os.path.join(reports_dir, "summary.csv")
    with open(out_path, "w") as fh:
        fh.write("scenario_id,mae,classification_accuracy,average_precision,"
                 "delta_mae,delta_ca,delta_ap\n")
        for r in rows:
            fh.write(",".join([
                str(r["scenario_id"]),
                f"{r['mae']:.17g}",
                f"{r['classification_accuracy']:.17g}",
                f"{r['average_precision']:.17g}",
                f"{r['mae'] - base['mae']:.17g}",
                f"{r['classification_accuracy'] - base['classification_accuracy']:.17g}",
                f"{r['average_precision'] - base['average_precision']:.17g}",
            ]) + "\n")
    return out_path, rows


# -- argument parsing ------------------------------------------------------

def _add_common(sub):
    sub.add_argument("--config", default=None, help="JSON run config")
    sub.add_argument("--seed", type=int, default=None, help="master seed")
    sub.add_argument("--out", required=True, help="output directory")
    sub.add_argument("--overwrite", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(prog="vibrogan",
                                     description="1-D WGAN-GP augmentation and "
                                                 "DCNN damage detection toolkit")
    subs = parser.add_subparsers(dest="command", required=True)

    s = subs.add_parser("surrogate", help="write surrogate undamaged/damaged records")
    _add_common(s)
    for flag, default in (("--natural-freq", 120.0), ("--damping", 0.002),
                          ("--damage-factor", 0.7), ("--excitation-std", 1.0),
                          ("--duration", 256.0), ("--rate", 1024.0)):
        s.add_argument(flag, type=float, default=default)

    s = subs.add_parser("train-gan", help="train the GAN on the damaged pool")
    _add_common(s)

    s = subs.add_parser("generate", help="sample synthetic damaged windows")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--n", type=int, default=256)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True, help="output windows CSV")

    s = subs.add_parser("eval-gan", help="evaluate a generator checkpoint")
    s.add_argument("--checkpoint", required=True)
    s.add_argument("--real", required=True, help="real damaged windows CSV")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--pairing", choices=("one_to_one", "all_pairs"),
                   default="one_to_one")
    s.add_argument("--out", required=True)

    s = subs.add_parser("run-scenarios", help="run the six-scenario experiment")
    _add_common(s)

    s = subs.add_parser("report", help="summarize a finished run directory")
    s.add_argument("--run", required=True)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except Exception as exc:  # CLI boundary: nonzero exit with a stage-named message
        print(f"{args.command}: {exc}", file=sys.stderr)
        return 1


def _dispatch(args):
    if args.command == "surrogate":
        os.makedirs(args.out, exist_ok=True)
        seed = args.seed if args.seed is not None else 0
        base = dict(natural_freq_hz=args.natural_freq, damping_ratio=args.damping,
                    damage_freq_factor=args.damage_factor,
                    excitation_std=args.excitation_std,
                    duration_s=args.duration, rate=args.rate)
        for condition, tag in ((UNDAMAGED, "undamaged"), (DAMAGED, "damaged")):
            record = signal_core.generate_surrogate_record(
                SurrogateParams(**base, seed=stage_seed(seed, f"surrogate-{tag}")),
                condition=condition)
            signal_core.save_record(os.path.join(args.out, f"{tag}.csv"), record)
        print(f"wrote {args.out}/undamaged.csv and {args.out}/damaged.csv")
        return 0

    if args.command == "train-gan":
        cfg = load_run_config(args.config, {"seed": args.seed})
        _prepare_dir(args.out, args.overwrite)
        _, d_pool = _window_pools(cfg)
        cfg = {**cfg, "generator_checkpoint": None}
        _train_or_load_generator(cfg, d_pool, args.out)
        print(f"trained generator -> {args.out}/checkpoints/generator_final.ckpt")
        return 0

    if args.command == "generate":
        net, store, kind, meta = load_checkpoint(args.checkpoint)
        if kind != "generator":
            raise ValueError(f"checkpoint kind {kind!r} is not a generator")
        latent = meta.get("config", {}).get("latent_channels", 100)
        windows = generate(net, store, args.n, args.seed, latent_channels=latent)
        signal_core.save_windows(args.out, windows)
        print(f"wrote {args.n} synthetic windows to {args.out}")
        return 0

    if args.command == "eval-gan":
        real = signal_core.load_windows(args.real)
        summary = cmd_eval_gan(args.checkpoint, real, args.out, seed=args.seed,
                               pairing=args.pairing)
        print(json.dumps(summary, indent=2))
        return 0

    if args.command == "run-scenarios":
        cfg = load_run_config(args.config, {"seed": args.seed})
        reports = cmd_run_scenarios(cfg, args.out, overwrite=args.overwrite)
        for r in reports:
            print(f"scenario {r['scenario_id']}: "
                  f"MAE={r['mae']:.4g} CA={r['classification_accuracy']:.4g} "
                  f"AP={r['average_precision']:.4g}")
        return 0

    if args.command == "report":
        out_path, rows = cmd_report(args.run)
        print(f"wrote {out_path} ({len(rows)} scenarios)")
        return 0

    raise ValueError(f"unknown command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
