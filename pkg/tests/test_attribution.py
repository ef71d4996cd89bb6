"""Inverse voting: attribution duality, vote maps, interactions, rendering."""

import numpy as np
import pytest

from houghvote import (
    ImageSizeMismatch,
    OutOfBounds,
    attribute,
    class_interactions,
    render_heatmap,
    vote_map,
    vote_scatter,
)
from conftest import DATA_DIR
from oracles import rel_max_err


class TestAttribute:
    def test_zero_evidence_empty(self, field_9):
        E = np.zeros((12, 12, 9), dtype=np.float32)
        assert attribute(E, field_9, (6, 6)) == []

    def test_keep_zeros_lists_geometric_voters(self, field_9):
        E = np.zeros((40, 40, 9), dtype=np.float32)
        records = attribute(E, field_9, (20, 20), keep_zeros=True)
        # Interior center: one record per (region, offset) pair.
        assert len(records) == sum(field_9.counts)
        assert all(rec.strength == 0.0 for rec in records)

    def test_single_voter(self, field_5):
        # Put evidence at the one pixel that reaches the center through
        # region 1's offset (0, 3): voter = center - delta.
        E = np.zeros((11, 11, 5), dtype=np.float32)
        E[5, 2, 1] = 2.0
        records = attribute(E, field_5, (5, 5))
        assert len(records) == 1
        rec = records[0]
        assert rec.voter == (5, 2)
        assert rec.region == 1
        assert rec.strength == pytest.approx(2.0 / field_5.counts[1])

    def test_duality_random(self, field_9):
        rng = np.random.default_rng(42)
        E = rng.standard_normal((32, 32, 9)).astype(np.float32)
        O = vote_scatter(E, field_9)
        for _ in range(10):
            cy, cx = rng.integers(0, 32, size=2)
            total = sum(rec.strength for rec in attribute(E, field_9, (cy, cx)))
            assert rel_max_err(total, float(O[cy, cx])) < 1e-6

    def test_completeness_is_reflected_support(self, field_5):
        # Voter set == point-reflected field support at the center, in-bounds.
        rng = np.random.default_rng(43)
        H, W = 9, 8
        E = rng.random((H, W, 5), dtype=np.float32) + 0.5  # strictly positive
        cy, cx = 2, 6
        got = {(rec.voter, rec.region) for rec in attribute(E, field_5, (cy, cx))}
        want = set()
        for r, offs in enumerate(field_5.offsets):
            for dy, dx in offs:
                i, j = cy - int(dy), cx - int(dx)
                if 0 <= i < H and 0 <= j < W:
                    want.add(((i, j), r))
        assert got == want

    def test_strengths_reproducible(self, field_9):
        rng = np.random.default_rng(44)
        E = rng.standard_normal((16, 16, 9)).astype(np.float32)
        for rec in attribute(E, field_9, (8, 9)):
            i, j = rec.voter
            assert rec.strength == float(E[i, j, rec.region]) / field_9.counts[rec.region]

    def test_out_of_bounds_center(self, field_9):
        with pytest.raises(OutOfBounds):
            attribute(np.zeros((8, 8, 9), dtype=np.float32), field_9, (8, 0))


class TestVoteMap:
    def test_empty(self):
        assert not vote_map([], 6, 6).any()

    def test_single_record(self, field_9):
        E = np.zeros((10, 10, 9), dtype=np.float32)
        E[3, 4, 0] = 1.0
        records = attribute(E, field_9, (3, 4))
        m = vote_map(records, 10, 10)
        assert m[3, 4] == pytest.approx(1.0 / field_9.counts[0])
        assert np.count_nonzero(m) == 1

    def test_duality_through_map(self, field_9):
        rng = np.random.default_rng(45)
        E = rng.standard_normal((20, 20, 9)).astype(np.float32)
        O = vote_scatter(E, field_9)
        records = attribute(E, field_9, (10, 12))
        assert rel_max_err(vote_map(records, 20, 20).sum(dtype=np.float64),
                           float(O[10, 12])) < 1e-6


class TestClassInteractions:
    def test_no_detections(self, field_9):
        M = class_interactions([], np.zeros((3, 8, 8, 9), dtype=np.float32),
                               np.zeros((3, 8, 8), dtype=np.float32), field_9)
        assert M.shape == (3, 3)
        assert not M.any()

    def test_uniform_probabilities(self, field_9):
        rng = np.random.default_rng(46)
        C, H, W = 4, 30, 30
        E = rng.standard_normal((C, H, W, 9)).astype(np.float32)
        probs = np.full((C, H, W), 1.0 / C, dtype=np.float32)
        cy, cx = 15, 15
        M = class_interactions([(2, cy, cx)], E, probs, field_9)
        # Independent enumeration of distinct voter pixels.
        voters = set()
        for offs in field_9.offsets:
            for dy, dx in offs:
                voters.add((cy - int(dy), cx - int(dx)))
        want = len(voters) / C
        assert M[2] == pytest.approx(np.full(C, want), rel=1e-6)
        assert not M[[0, 1, 3]].any()

    def test_one_hot_probabilities(self, field_9):
        rng = np.random.default_rng(47)
        C, H, W = 3, 20, 20
        E = rng.standard_normal((C, H, W, 9)).astype(np.float32)
        probs = np.zeros((C, H, W), dtype=np.float32)
        probs[1] = 1.0
        M = class_interactions([(0, 10, 10), (2, 5, 5)], E, probs, field_9)
        assert not M[:, 0].any() and not M[:, 2].any()
        assert M[0, 1] > 0 and M[2, 1] > 0

    def test_accepts_detection_objects(self, field_9):
        from houghvote import Detection
        rng = np.random.default_rng(48)
        E = rng.standard_normal((2, 16, 16, 9)).astype(np.float32)
        probs = rng.random((2, 16, 16)).astype(np.float32)
        det = Detection(class_id=1, score=1.0, box=(0, 0, 1, 1), center=(8, 8))
        a = class_interactions([det], E, probs, field_9)
        b = class_interactions([(1, 8, 8)], E, probs, field_9)
        assert np.array_equal(a, b)

    def test_negative_probs_rejected(self, field_9):
        with pytest.raises(ValueError):
            class_interactions([], np.zeros((2, 8, 8, 9), dtype=np.float32),
                               np.full((2, 8, 8), -1.0, dtype=np.float32), field_9)


class TestRenderHeatmap:
    def test_constant_map_is_midpoint_color(self):
        img = render_heatmap(np.full((4, 6), 3.25, dtype=np.float32))
        assert img.shape == (4, 6, 3)
        # Jet midpoint: (0.5, 1.0, 0.5) scaled to bytes.
        assert (img == np.array([128, 255, 128], dtype=np.uint8)).all()

    def test_endpoints(self):
        img = render_heatmap(np.array([[0.0, 1.0]], dtype=np.float32))
        assert tuple(img[0, 0]) == (0, 0, 128)   # dark blue
        assert tuple(img[0, 1]) == (128, 0, 0)   # dark red

    def test_golden_png_bytes(self, tmp_path):
        # Frozen rendering of a fixed random map; regenerate both files
        # together if the colormap ever changes intentionally.
        from houghvote.attribution import save_png
        m = np.load(DATA_DIR / "golden_heatmap_input.npy")
        out = tmp_path / "render.png"
        save_png(render_heatmap(m), out)
        assert out.read_bytes() == (DATA_DIR / "golden_heatmap.png").read_bytes()

    def test_underlay_blend(self):
        m = np.array([[0.0, 1.0]], dtype=np.float32)
        under = np.full((1, 2, 3), 255, dtype=np.uint8)
        img = render_heatmap(m, underlay=under, alpha=0.5)
        assert tuple(img[0, 0]) == (128, 128, 192)

    def test_underlay_size_mismatch(self):
        with pytest.raises(ImageSizeMismatch):
            render_heatmap(np.zeros((4, 4)), underlay=np.zeros((5, 4, 3), dtype=np.uint8))
