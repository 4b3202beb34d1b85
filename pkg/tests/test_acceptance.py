"""Acceptance gate: one test per release criterion.

Each test prints a single PASS-style line through its name; tolerances are
pinned here and must not be loosened. The localisation criteria share one
trained classifier (session fixture) so the whole gate stays inside the
per-criterion runtime budgets on a single core.
"""

from __future__ import annotations

import dataclasses
import filecmp
import math
import time
from pathlib import Path

import numpy as np
import pytest

from trackday import cli, percept, tracks
from trackday.control import gaussian_weight, relative_angle
from trackday.driver import Driver, DriverConfig
from trackday.localize import (
    MlpModel,
    TrainConfig,
    ZoneLocalizer,
    balance_samples,
    collect_practice_samples,
    train_classifier,
    transition_filter,
)
from trackday.percept import CameraModel, dice_loss, pooled_features, render_mask
from trackday.reward import RewardConfig, segment_penalty, steering_penalty
from trackday.sim import Observation, SimConfig, VehicleState, run_episode, step
from trackday.track import assign_zone, locate

DATA = Path(__file__).resolve().parent.parent / "src" / "trackday" / "data"


@pytest.fixture(scope="session")
def zone_classifier(hairpin):
    """Practice-period zone classifier on the bundled hairpin track.

    Returns (model, training_accuracy, wall_seconds); shared by the
    localisation-accuracy and ablation criteria.
    """
    t0 = time.perf_counter()
    cfg = DriverConfig()
    samples = collect_practice_samples(
        hairpin, SimConfig(), CameraModel(), sample_budget=4500, labeler="zones", driver_config=cfg
    )
    train_cfg = TrainConfig()
    balanced = balance_samples(samples, target_classes=(1, 2), extra=train_cfg.balance_extra, seed=0)
    model, _ = train_classifier(balanced, train_cfg, num_classes=3)
    x = np.array([s.features for s in balanced])
    y = np.array([s.label for s in balanced])
    accuracy = float(np.mean(np.argmax(model.forward(x), axis=1) == y))
    return model, accuracy, time.perf_counter() - t0


def race(track, driver, laps=3):
    return run_episode(driver, track, SimConfig(), camera=CameraModel(), mode="race", laps=laps, max_steps=200_000)


class TestCriterion1FormulaUnits:
    def test_criterion_1_steering_penalty(self):
        cfg = RewardConfig()
        assert steering_penalty(cfg.max_velocity, 1.0, cfg) == pytest.approx(-0.1, abs=1e-12)

    def test_criterion_1_segment_penalty(self):
        assert segment_penalty(16.0) == pytest.approx(-0.02, abs=1e-12)

    def test_criterion_1_dice(self):
        pred = np.array([[1, 1, 1, 1, 0, 0]], dtype=np.uint8)  # TP=3, FP=1
        truth = np.array([[1, 1, 1, 0, 1, 1]], dtype=np.uint8)  # FN=2
        assert dice_loss(pred, truth) == pytest.approx(1.0 / 3.0, abs=1e-12)

    def test_criterion_1_velocity_weight(self):
        assert gaussian_weight(0.0, 2, 0.5) == pytest.approx(0.432332, abs=1e-6)

    def test_criterion_1_relative_angle(self):
        width = 256
        cl = np.array([[width // 2 + 128, 128]])
        assert relative_angle(cl, speed=0.0, width=width) == -0.5


class TestCriterion2GradientCheck:
    def test_criterion_2_mlp_gradients(self):
        t0 = time.perf_counter()
        h = 1e-6
        probes = 0
        for seed in range(4):
            rng = np.random.default_rng(seed)
            model = MlpModel(16, 3, hidden=(12, 10), rng=rng)
            x = rng.normal(size=(6, 16))
            labels = rng.integers(0, 3, size=6)
            _, gw, gb = model.loss_and_gradients(x, labels)
            params = [(model.weights, gw), (model.biases, gb)]
            for _ in range(30):
                arrays, grads = params[rng.integers(0, 2)]
                k = int(rng.integers(0, len(arrays)))
                idx = tuple(rng.integers(0, d) for d in arrays[k].shape)
                orig = arrays[k][idx]
                arrays[k][idx] = orig + h
                lp, _, _ = model.loss_and_gradients(x, labels)
                arrays[k][idx] = orig - h
                lm, _, _ = model.loss_and_gradients(x, labels)
                arrays[k][idx] = orig
                fd = (lp - lm) / (2 * h)
                analytic = grads[k][idx]
                rel = abs(analytic - fd) / max(1e-8, abs(analytic) + abs(fd))
                assert rel < 1e-4, f"seed {seed} param {k}{idx}: analytic {analytic} vs fd {fd}"
                probes += 1
        assert probes >= 100
        assert time.perf_counter() - t0 < 10.0


class TestCriterion3LocalizationAccuracy:
    def test_criterion_3_training_and_fresh_lap_accuracy(self, hairpin, zone_classifier):
        model, train_accuracy, train_wall = zone_classifier
        assert train_accuracy >= 0.99

        t0 = time.perf_counter()
        cfg = DriverConfig()
        hits = [0, 0]

        def score(step_index, state, pose, obs, action, rec):
            features = pooled_features(obs.mask, cfg.pool_h, cfg.pool_w)
            pred = int(np.argmax(model.forward(features)))
            hits[1] += 1
            hits[0] += pred == assign_zone(state.position, hairpin.zone_boxes)

        # fresh lap: same speed regime, different phase (starts a third of the
        # way around, so every frame is new relative to the training drive)
        lap_steps = int(hairpin.total_length / (9.5 * SimConfig().dt)) + 80
        run_episode(
            Driver(cfg, practice=True),
            hairpin,
            SimConfig(),
            camera=CameraModel(),
            mode="practice",
            max_steps=lap_steps,
            start_arclength=hairpin.total_length / 3.0,
            on_step=score,
        )
        eval_accuracy = hits[0] / hits[1]
        assert eval_accuracy >= 0.95
        assert train_wall + (time.perf_counter() - t0) < 300.0


class TestCriterion4LocalizationAblation:
    def test_criterion_4_zones_speed_gain(self, hairpin, zone_classifier):
        model, _, _ = zone_classifier
        t0 = time.perf_counter()
        off_log = race(hairpin, Driver(DriverConfig()))
        localizer = ZoneLocalizer(model, labeler="zones")
        zones_log = race(hairpin, Driver(DriverConfig(), localizer=localizer))
        for log in (off_log, zones_log):
            assert log.laps_completed == 3
            assert log.off_track_count == 0
            assert not log.dnf
        assert zones_log.average_speed_kph >= 1.10 * off_log.average_speed_kph
        assert time.perf_counter() - t0 < 120.0


class TestCriterion5Safety:
    @pytest.mark.parametrize("track_file", ["hairpin.json", "oval.json"])
    def test_criterion_5_three_clean_laps(self, track_file):
        from trackday.track import load_track

        track = load_track(DATA / track_file)
        log = race(track, Driver(DriverConfig()))
        assert log.laps_completed == 3
        assert log.off_track_count == 0
        assert not log.dnf


class TestCriterion6SteeringStability:
    def test_criterion_6_offset_decay(self, straight):
        track = straight
        hw = track.half_width
        cam = CameraModel()
        sim_cfg = SimConfig()
        p = track.point_at(0.0)
        heading = track.heading_at(0.0)
        # displace half the half-width to the left of the centerline
        normal = (-math.sin(heading), math.cos(heading))
        state = VehicleState(
            position=(float(p[0]) + 0.5 * hw * normal[0], float(p[1]) + 0.5 * hw * normal[1]),
            heading=heading,
            speed=10.0,
        )
        driver = Driver(DriverConfig())
        laterals = []
        t = 0.0
        while t < 60.0:
            mask = render_mask(state, track, cam)
            obs = Observation(mask=mask, speed=state.speed, time=t, dt=sim_cfg.dt)
            state = step(state, driver(obs), sim_cfg)
            t += sim_cfg.dt
            laterals.append((t, abs(locate(state.position, state.heading, track).lateral_offset)))
        settled = [t for t, lat in laterals if lat < 0.1 * hw]
        assert settled and settled[0] <= 10.0
        assert max(lat for t, lat in laterals if t >= settled[0]) < 0.1 * hw  # no divergence over 60 s


class TestCriterion7Determinism:
    def _run_twice(self, tmp_path, argv_builder, compare_names):
        dirs = []
        for run in ("a", "b"):
            out = tmp_path / run
            assert cli.main(argv_builder(out)) == 0
            dirs.append(out)
        for name in compare_names:
            fa, fb = dirs[0] / name, dirs[1] / name
            assert filecmp.cmp(fa, fb, shallow=False), f"{name} differs between identical seeded runs"

    def test_criterion_7_race_outputs_byte_identical(self, tmp_path):
        self._run_twice(
            tmp_path,
            lambda out: [
                "race", "--track", str(DATA / "oval.json"), "--seed", "7", "--laps", "1", "--out", str(out),
            ],
            ["race_log.jsonl", "race_report.json"],
        )

    def test_criterion_7_practice_outputs_byte_identical(self, tmp_path):
        import json

        cfg_path = tmp_path / "run.json"
        cfg_path.write_text(
            json.dumps(
                {
                    "track": str(DATA / "oval.json"),
                    "localization": "segment",
                    "sample_budget": 800,
                    "seed": 3,
                    "train": {"epochs": 20, "rng_seed": 3},
                }
            )
        )
        self._run_twice(
            tmp_path,
            lambda out: ["practice", "--config", str(cfg_path), "--out", str(out)],
            ["segment_model.bin", "practice_stats.json"],
        )


class TestCriterion8TransitionFilter:
    def test_criterion_8_steps_only_zero_or_plus_one(self):
        n = 40
        rng = np.random.default_rng(12345)
        predictions = rng.integers(0, n, size=100_000)
        current = 0
        for predicted in predictions:
            accepted = transition_filter(current, int(predicted), n)
            assert (accepted - current) % n in (0, 1)
            current = accepted


class TestCriterion9RendererOracle:
    def test_criterion_9_bottom_row_width_matches_pinhole(self):
        track = tracks.long_straight_track(half_width=0.5)
        p = track.point_at(0.0)
        state = VehicleState(position=(float(p[0]), float(p[1])), heading=track.heading_at(0.0))
        h, w = 384, 512
        configs = [
            CameraModel(mount_height=mh, pitch=pitch)
            for mh in (0.8, 1.2, 1.6, 2.0)
            for pitch in (0.10, 0.16, 0.22, 0.28, 0.34)
        ]
        assert len(configs) == 20
        for cam in configs:
            mask = render_mask(state, track, cam, height=h, width=w)
            f = cam.focal_px(w)
            y_img = (h - 0.5 - h / 2.0) / f  # bottom pixel row centre
            t = cam.mount_height / (math.sin(cam.pitch) + y_img * math.cos(cam.pitch))
            expected = 2.0 * f * track.half_width / t
            measured = int(mask[-1].sum())
            assert abs(measured - expected) <= 1.0, (
                f"height={cam.mount_height} pitch={cam.pitch}: {measured} px vs {expected:.3f} px"
            )
