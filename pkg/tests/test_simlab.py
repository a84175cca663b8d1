import math

import numpy as np
import pytest

from ioulab import (
    Box,
    CaseResult,
    LossSpec,
    SimConfig,
    generate_case_arrays,
    generate_cases,
    run_case,
    run_simulation,
)
from ioulab.simlab import CHUNK_CASES


def tiny_cfg(**overrides) -> SimConfig:
    base = dict(
        specs=(LossSpec("iou"),),
        target_aspects=(0.5, 2.0),
        anchor_scales=(1.0, 1.5),
        anchor_aspects=(1.0, 2.0),
        n_points=3,
        iterations=5,
    )
    base.update(overrides)
    return SimConfig(**base)


class TestSimConfig:
    def test_defaults_match_reference_protocol(self):
        cfg = SimConfig(specs=(LossSpec("iou"),))
        assert cfg.center == (100.0, 100.0)
        assert cfg.n_points == 2000
        assert cfg.radius == (0.0, 3.0)
        assert cfg.iterations == 200
        assert cfg.step_size == 0.1
        assert cfg.step_schedule == "diou_style"
        assert len(cfg.target_aspects) == len(cfg.anchor_aspects) == len(cfg.anchor_scales) == 7

    def test_case_count(self):
        assert SimConfig(specs=(LossSpec("iou"),)).case_count == 686000
        assert SimConfig(specs=(LossSpec("iou"),), n_points=10).case_count == 3430

    @pytest.mark.parametrize(
        "overrides,match",
        [
            (dict(n_points=0), "n_points"),
            (dict(iterations=0), "iterations"),
            (dict(radius=(3.0, 1.0)), "radius"),
            (dict(radius=(-1.0, 2.0)), "radius"),
            (dict(step_size=0.0), "step_size"),
            (dict(step_schedule="momentum"), "step_schedule"),
            (dict(target_aspects=()), "target_aspects"),
            (dict(anchor_scales=(1.0, -2.0)), "anchor_scales"),
            (dict(target_area=0.0), "target_area"),
            (dict(min_size=0.0), "min_size"),
            (dict(center=(1.0,)), "center"),
        ],
    )
    def test_validation(self, overrides, match):
        base = dict(specs=(LossSpec("iou"),))
        base.update(overrides)
        with pytest.raises(ValueError, match=match):
            SimConfig(**base)

    def test_specs_must_be_loss_specs(self):
        with pytest.raises(ValueError, match="LossSpec"):
            SimConfig(specs=("iou",))

    def test_dict_round_trip(self):
        cfg = tiny_cfg(specs=(LossSpec("ciou"), LossSpec("ciou", inner=0.8)), seed=7)
        assert SimConfig.from_dict(cfg.to_dict()) == cfg

    def test_from_dict_unknown_field_named(self):
        data = tiny_cfg().to_dict()
        data["stepsize"] = 0.2
        with pytest.raises(ValueError, match="unknown config field 'stepsize'"):
            SimConfig.from_dict(data)

    def test_from_dict_missing_specs(self):
        with pytest.raises(ValueError, match="specs"):
            SimConfig.from_dict({"n_points": 5})

    def test_from_dict_bad_nested_spec(self):
        data = tiny_cfg().to_dict()
        data["specs"] = [{"base": "iou", "ratio": 0.8}]
        with pytest.raises(ValueError, match="unknown loss spec field 'ratio'"):
            SimConfig.from_dict(data)


class TestCaseGeneration:
    def test_shapes_and_count(self):
        cfg = tiny_cfg()
        anchors, targets = generate_case_arrays(cfg)
        assert anchors.shape == targets.shape == (cfg.case_count, 4)
        assert cfg.case_count == 2 * 3 * 2 * 2

    def test_deterministic_given_seed(self):
        cfg = tiny_cfg(seed=42)
        a1, t1 = generate_case_arrays(cfg)
        a2, t2 = generate_case_arrays(cfg)
        assert np.array_equal(a1, a2) and np.array_equal(t1, t2)
        a3, _ = generate_case_arrays(tiny_cfg(seed=43))
        assert not np.array_equal(a1, a3)

    def test_targets_centered_with_requested_aspects(self):
        cfg = tiny_cfg()
        _, targets = generate_case_arrays(cfg)
        assert np.all(targets[:, 0] == 100.0) and np.all(targets[:, 1] == 100.0)
        block = cfg.n_points * len(cfg.anchor_scales) * len(cfg.anchor_aspects)
        for i, aspect in enumerate(cfg.target_aspects):
            rows = targets[i * block : (i + 1) * block]
            assert np.all(rows == rows[0])
            w, h = rows[0, 2], rows[0, 3]
            assert w * h == pytest.approx(cfg.target_area, rel=1e-12)
            assert w / h == pytest.approx(aspect, rel=1e-12)

    def test_anchor_areas_aspects_and_annulus(self):
        cfg = tiny_cfg(radius=(6.0, 9.0), n_points=50)
        anchors, _ = generate_case_arrays(cfg)
        r = np.hypot(anchors[:, 0] - 100.0, anchors[:, 1] - 100.0)
        assert np.all(r >= 6.0 - 1e-9) and np.all(r <= 9.0 + 1e-9)
        ns, na = len(cfg.anchor_scales), len(cfg.anchor_aspects)
        for row in range(0, len(anchors), 997):
            si = (row // na) % ns
            ai = row % na
            w, h = anchors[row, 2], anchors[row, 3]
            assert w * h == pytest.approx(cfg.anchor_scales[si] * cfg.target_area, rel=1e-12)
            assert w / h == pytest.approx(cfg.anchor_aspects[ai], rel=1e-12)

    def test_nesting_order(self):
        cfg = tiny_cfg()
        anchors, targets = generate_case_arrays(cfg)
        # innermost: anchor aspect; then scale; then sampled point; outermost target aspect
        assert np.array_equal(anchors[0, :2], anchors[1, :2])
        assert anchors[0, 2] != anchors[1, 2]
        assert np.array_equal(anchors[0, :2], anchors[2, :2])
        area01 = anchors[0, 2] * anchors[0, 3]
        area2 = anchors[2, 2] * anchors[2, 3]
        assert area2 == pytest.approx(1.5 * area01, rel=1e-12)
        assert not np.array_equal(anchors[0, :2], anchors[4, :2])  # next sampled point
        # the point sample is shared across target aspects
        block = cfg.n_points * 4
        assert np.array_equal(anchors[0], anchors[block])
        assert not np.array_equal(targets[0], targets[block])

    def test_box_pair_view_matches_arrays(self):
        cfg = tiny_cfg()
        anchors, targets = generate_case_arrays(cfg)
        pairs = generate_cases(cfg)
        assert len(pairs) == cfg.case_count
        assert pairs[5][0].as_tuple() == tuple(anchors[5])
        assert pairs[5][1].as_tuple() == tuple(targets[5])


class TestRunCase:
    def test_coincident_start_stays_at_zero(self):
        cfg = tiny_cfg(iterations=20)
        b = Box(100.0, 100.0, 2.0, 0.5)
        for spec in (LossSpec("iou"), LossSpec("siou"), LossSpec("ciou", inner=0.8)):
            res = run_case(spec, b, b, cfg)
            assert isinstance(res, CaseResult)
            assert res.error_curve.shape == (21,)
            assert np.all(res.error_curve == 0.0)
            assert res.final_iou == 1.0
            assert res.clamps == 0

    def test_disjoint_overlap_loss_plateaus(self):
        cfg = tiny_cfg(iterations=10)
        res = run_case(LossSpec("iou"), Box(120, 100, 1, 1), Box(100, 100, 1, 1), cfg)
        assert np.all(res.error_curve == res.error_curve[0])
        assert res.final_iou == 0.0

    def test_enclosure_penalty_moves_disjoint_boxes(self):
        cfg = tiny_cfg(iterations=100)
        res = run_case(LossSpec("giou"), Box(120, 100, 1, 1), Box(100, 100, 1, 1), cfg)
        assert res.error_curve[-1] < res.error_curve[0]

    def test_initial_error_is_spec_independent(self):
        cfg = tiny_cfg(iterations=2)
        a, t = Box(101, 99, 2, 1), Box(100, 100, 1, 1)
        errs = {run_case(LossSpec(b), a, t, cfg).error_curve[0] for b in ("iou", "giou", "siou")}
        assert len(errs) == 1

    def test_single_iteration_curve_length(self):
        cfg = tiny_cfg(iterations=1)
        res = run_case(LossSpec("diou"), Box(101, 100, 1, 1), Box(100, 100, 1, 1), cfg)
        assert res.error_curve.shape == (2,)

    def test_size_clamp_counts_events(self):
        # equilibrium sides sit below min_size, so both sides clamp every step
        cfg = tiny_cfg(iterations=7, min_size=5.0, step_schedule="constant", step_size=0.05)
        res = run_case(LossSpec("iou"), Box(0, 0, 4.0, 4.0), Box(0, 0, 3.0, 3.0), cfg)
        assert res.clamps == 2 * cfg.iterations
        assert res.error_curve[-1] == pytest.approx(4.0)  # four corners, each off by 1

    def test_corner_error_metric(self):
        cfg = tiny_cfg(iterations=1)
        res = run_case(LossSpec("iou"), Box(103, 100, 1, 1), Box(100, 100, 1, 1), cfg)
        assert res.error_curve[0] == pytest.approx(6.0)  # |dx| on both x corners


class TestRunSimulation:
    def test_summaries_per_spec_with_labels(self):
        cfg = tiny_cfg(specs=(LossSpec("ciou"), LossSpec("ciou", inner=0.8)))
        out = run_simulation(cfg)
        assert [s.label for s in out] == ["ciou", "inner-ciou(0.8)"]
        assert [s.spec_id for s in out] == [0, 1]
        for s in out:
            assert s.total_error_curve.shape == (cfg.iterations + 1,)
            assert np.all(s.total_error_curve >= 0.0)

    def test_aggregation_identity_exact(self):
        cfg = tiny_cfg(specs=(LossSpec("giou"),), iterations=6)
        [summary] = run_simulation(cfg)
        pairs = generate_cases(cfg)
        per_case = [
            run_case(cfg.specs[0], a, t, cfg, case_id=i).error_curve
            for i, (a, t) in enumerate(pairs)
        ]
        stacked = np.array(per_case)
        for t in range(cfg.iterations + 1):
            assert np.sum(stacked[:, t].copy()) == summary.total_error_curve[t]

    def test_mean_final_and_auc_consistent(self):
        cfg = tiny_cfg(specs=(LossSpec("diou"),), iterations=9)
        [s] = run_simulation(cfg, per_case=True)
        assert s.mean_final_error == pytest.approx(
            s.total_error_curve[-1] / cfg.case_count, rel=1e-12
        )
        assert s.auc == pytest.approx(float(np.trapezoid(s.total_error_curve)), rel=1e-12)
        assert np.sum(s.case_final_error) == pytest.approx(s.total_error_curve[-1], rel=1e-12)
        assert np.sum(s.case_initial_error) == pytest.approx(s.total_error_curve[0], rel=1e-12)
        assert s.case_final_iou.shape == (cfg.case_count,)
        assert np.all(s.case_clamps >= 0)

    def test_repeat_runs_identical(self):
        cfg = tiny_cfg(specs=(LossSpec("siou"),), seed=5)
        [a] = run_simulation(cfg)
        [b] = run_simulation(cfg)
        assert np.array_equal(a.total_error_curve, b.total_error_curve)

    def test_thread_count_does_not_change_bits(self):
        cfg = SimConfig(
            specs=(LossSpec("ciou", inner=0.8),),
            n_points=30,  # 10290 cases: more than one chunk
            iterations=8,
        )
        assert cfg.case_count > CHUNK_CASES
        [serial] = run_simulation(cfg, threads=1)
        [pooled] = run_simulation(cfg, threads=4)
        assert np.array_equal(serial.total_error_curve, pooled.total_error_curve)
        assert serial.mean_final_error == pooled.mean_final_error
        assert serial.auc == pooled.auc

    def test_threads_validation(self):
        with pytest.raises(ValueError, match="threads"):
            run_simulation(tiny_cfg(), threads=-1)

    def test_constant_schedule_supported(self):
        cfg = tiny_cfg(specs=(LossSpec("iou"),), step_schedule="constant", iterations=4)
        [s] = run_simulation(cfg)
        assert s.total_error_curve.shape == (5,)
