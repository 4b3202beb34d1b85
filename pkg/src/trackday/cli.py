"""Command-line harness: practice, race, ablate, report."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import localize, percept
from .config import RunConfig, load_run_config
from .driver import Driver, DriverConfig
from .localize import MlpModel, ZoneLocalizer, balance_samples, collect_practice_samples, train_classifier
from .reward import steering_penalty
from .sim import run_episode
from .track import assign_zone, load_track


def _driver_config(cfg: RunConfig) -> DriverConfig:
    return DriverConfig(
        pid=dataclasses.replace(cfg.pid),
        accel=cfg.accel,
        practice_speed=cfg.driver.practice_speed,
        pool_h=cfg.driver.pool_h,
        pool_w=cfg.driver.pool_w,
        zone2_release_speed=cfg.driver.zone2_release_speed,
        zone1_corner_speed=cfg.driver.zone1_corner_speed,
        creep_speed=cfg.driver.creep_speed,
        steer_speed_ref=cfg.driver.steer_speed_ref,
        lateral_accel=cfg.driver.lateral_accel,
        brake_decel=cfg.driver.brake_decel,
        blind_speed=cfg.driver.blind_speed,
        camera=cfg.camera,
    )


def cmd_practice(cfg: RunConfig, out_dir: Path) -> dict:
    """Collect practice samples, balance, train and save the classifier."""
    if cfg.localization == "off":
        raise SystemExit("practice requires --localization segment|sections|zones")
    track = load_track(cfg.track)
    labeler = cfg.localization
    finetune_kept = 0

    def frame_hook(state, pose, obs):
        nonlocal finetune_kept
        truth = percept.render_mask(state, track, cfg.camera)
        if percept.select_finetune_sample(obs.mask, truth, cfg.finetune_threshold):
            finetune_kept += 1

    samples = collect_practice_samples(
        track,
        cfg.sim,
        cfg.camera,
        sample_budget=cfg.sample_budget,
        labeler=labeler,
        driver_config=_driver_config(cfg),
        mask_noise=cfg.mask_noise,
        frame_hook=frame_hook if cfg.mask_noise > 0 else None,
    )
    n_classes = localize.num_labels(track, labeler)
    counts = np.bincount([s.label for s in samples], minlength=n_classes)
    missing = [int(c) for c in range(n_classes) if counts[c] == 0]
    if missing:
        raise SystemExit(f"practice drive never visited {labeler} classes {missing}; cannot train")
    if labeler == "zones" and cfg.train.balance_extra > 0:
        samples = balance_samples(samples, target_classes=(1, 2), extra=cfg.train.balance_extra, seed=cfg.seed)
    model, trace = train_classifier(samples, cfg.train, num_classes=n_classes)

    x = np.array([s.features for s in samples])
    y = np.array([s.label for s in samples])
    accuracy = float(np.mean(np.argmax(model.forward(x), axis=1) == y))

    out_dir.mkdir(parents=True, exist_ok=True)
    model_path = out_dir / f"{labeler}_model.bin"
    model.save(model_path)
    stats = {
        "labeler": labeler,
        "samples_collected": int(cfg.sample_budget),
        "label_counts": counts.tolist(),
        "samples_after_balancing": len(samples),
        "training_accuracy": accuracy,
        "final_loss": trace[-1],
        "epochs": cfg.train.epochs,
        "finetune_frames_kept": finetune_kept,
        "model_file": model_path.name,
    }
    with open(out_dir / "practice_stats.json", "w", encoding="utf-8") as fh:
        json.dump(stats, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return stats


def cmd_race(cfg: RunConfig, out_dir: Path, model_path=None, log_name: str = "race_log.jsonl") -> dict:
    """Run the configured number of laps with the full stack."""
    track = load_track(cfg.track)
    localizer = None
    if cfg.localization != "off":
        if model_path is None:
            raise SystemExit("racing with localisation enabled requires --model")
        model = MlpModel.load(model_path)
        localizer = ZoneLocalizer(model, labeler=cfg.localization, track=track)
    driver = Driver(_driver_config(cfg), localizer=localizer)

    zone_hits = 0
    zone_total = 0
    per_zone = {0: [0, 0], 1: [0, 0], 2: [0, 0]}

    def on_step(step_index, state, pose, obs, action, rec):
        nonlocal zone_hits, zone_total
        if localizer is not None:
            true_zone = assign_zone(state.position, track.zone_boxes)
            rec["zone_pred"] = driver.last_zone
            per_zone[true_zone][1] += 1
            zone_total += 1
            if driver.last_zone == true_zone:
                per_zone[true_zone][0] += 1
                zone_hits += 1

    log = run_episode(
        driver,
        track,
        cfg.sim,
        camera=cfg.camera,
        mode="race",
        laps=cfg.laps,
        max_steps=200_000,
        reward_config=cfg.reward,
        mask_noise=cfg.mask_noise,
        on_step=on_step,
    )
    report = {
        "track": str(cfg.track),
        "localization": cfg.localization,
        "laps_requested": cfg.laps,
        "laps_completed": log.laps_completed,
        "lap_times_s": [round(t, 6) for t in log.lap_times],
        "average_speed_kph": log.average_speed_kph,
        "off_track_count": log.off_track_count,
        "dnf": log.dnf,
        "control_rate_steps_per_s": 1.0 / cfg.sim.dt,
        "zone_accuracy": None,
    }
    if localizer is not None and zone_total:
        report["zone_accuracy"] = {
            "overall": zone_hits / zone_total,
            "per_zone": {str(z): (h / n if n else None) for z, (h, n) in per_zone.items()},
        }
    out_dir.mkdir(parents=True, exist_ok=True)
    log.save(out_dir / log_name)
    with open(out_dir / "race_report.json", "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return report


def cmd_ablate(cfg: RunConfig, out_dir: Path) -> list[dict]:
    """Race with localisation off and with each trainable classifier variant."""
    track = load_track(cfg.track)
    variants = ["off"]
    if len(track.section_keypoints) and track.zone_boxes:
        variants.append("sections")
    if track.zone_boxes:
        variants.append("zones")

    rows = []
    for variant in variants:
        vcfg = dataclasses.replace(cfg)
        vcfg.localization = variant
        vdir = out_dir / variant
        model_path = None
        if variant != "off":
            stats = cmd_practice(vcfg, vdir)
            model_path = vdir / stats["model_file"]
        report = cmd_race(vcfg, vdir, model_path=model_path, log_name=f"{variant}_log.jsonl")
        rows.append(
            {
                "variant": variant,
                "track": report["track"],
                "laps": report["laps_requested"],
                "laps_completed": report["laps_completed"],
                "average_speed_kph": report["average_speed_kph"],
                "lap_times_s": report["lap_times_s"],
                "off_track_count": report["off_track_count"],
                "dnf": report["dnf"],
            }
        )

    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "ablation.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["variant", "track", "laps", "laps_completed", "average_speed_kph", "off_track_count", "dnf"])
        for r in rows:
            writer.writerow(
                [r["variant"], r["track"], r["laps"], r["laps_completed"],
                 f"{r['average_speed_kph']:.3f}", r["off_track_count"], r["dnf"]]
            )
    return rows


def _format_ablation(rows: list[dict]) -> str:
    header = f"{'variant':<10} {'avg kph':>9} {'off-track':>9} {'dnf':>5}  lap times (s)"
    lines = [header, "-" * len(header)]
    for r in rows:
        laps = " ".join(f"{t:.1f}" for t in r["lap_times_s"])
        lines.append(
            f"{r['variant']:<10} {r['average_speed_kph']:>9.2f} {r['off_track_count']:>9d} {str(r['dnf']):>5}  {laps}"
        )
    return "\n".join(lines)


def cmd_report(log_path: Path, out_dir: Path, reward_cfg) -> dict:
    """Recompute a summary from a recorded episode log."""
    steps = []
    summary = None
    with open(log_path, encoding="utf-8") as fh:
        for line in fh:
            rec = json.loads(line)
            if "summary" in rec:
                summary = rec["summary"]
            else:
                steps.append(rec)
    total_reward = sum(s["reward"] for s in steps)
    term_totals = {}
    for s in steps:
        for name, value in s["reward_terms"].items():
            term_totals[name] = term_totals.get(name, 0.0) + value
    out = {
        "steps": len(steps),
        "recorded_summary": summary,
        "cumulative_reward": total_reward,
        "reward_term_totals": term_totals,
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    # penalty surface over speed ratio x steering grid
    with open(out_dir / "steering_penalty_surface.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        alphas = [i / 10 for i in range(11)]
        writer.writerow(["steering\\alpha"] + [f"{a:.1f}" for a in alphas])
        for s10 in range(-10, 11):
            s = s10 / 10
            row = [f"{s:.1f}"] + [
                f"{steering_penalty(a * reward_cfg.max_velocity, s, reward_cfg):.6g}" for a in alphas
            ]
            writer.writerow(row)
    with open(out_dir / "episode_report.json", "w", encoding="utf-8") as fh:
        json.dump(out, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trackday", description="2D racing simulator and control stack")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("practice", "race", "ablate", "report"):
        p = sub.add_parser(name)
        p.add_argument("--config", help="run config JSON file")
        p.add_argument("--track", help="track JSON file")
        p.add_argument("--seed", type=int)
        p.add_argument("--laps", type=int)
        p.add_argument("--localization", choices=["off", "segment", "sections", "zones"])
        p.add_argument("--model", help="trained classifier file (race)")
        p.add_argument("--out", default="out", help="output directory")
        if name == "report":
            p.add_argument("--log", required=True, help="episode log (JSONL) to summarise")
    return parser


def _resolve_config(args) -> RunConfig:
    cfg = load_run_config(args.config) if args.config else RunConfig()
    if args.track:
        cfg.track = args.track
    if args.laps is not None:
        cfg = dataclasses.replace(cfg, laps=args.laps)
    if args.localization is not None:
        cfg = dataclasses.replace(cfg, localization=args.localization)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    if args.command in ("practice", "race", "ablate") and not cfg.track:
        raise SystemExit("a track is required (--track or config file)")
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out_dir = Path(args.out)
    try:
        if args.command == "report":
            cfg = load_run_config(args.config) if args.config else RunConfig()
            result = cmd_report(Path(args.log), out_dir, cfg.reward)
            print(json.dumps(result, indent=1, sort_keys=True))
            return 0
        cfg = _resolve_config(args)
        if args.command == "practice":
            stats = cmd_practice(cfg, out_dir)
            print(json.dumps(stats, indent=1, sort_keys=True))
        elif args.command == "race":
            report = cmd_race(cfg, out_dir, model_path=args.model)
            print(json.dumps(report, indent=1, sort_keys=True))
        elif args.command == "ablate":
            rows = cmd_ablate(cfg, out_dir)
            print(_format_ablation(rows))
        return 0
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
