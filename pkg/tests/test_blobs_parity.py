"""Compiled kernel vs pure fallback: identical labels, sums, and heat maps."""

import numpy as np
import pytest

from ovinet.detector import DetectorConfig, score_heatmap
from ovinet.detector.blobs import blob_stats_pure
from ovinet.synthgen import GeneratorParams, generate_scene

native = pytest.importorskip("ovinet._native")

from ovinet.detector.blobs import blob_stats_native  # noqa: E402

FIELDS = ("count", "i_sum", "r_sum", "c_sum", "rr_sum", "cc_sum", "rc_sum")


@pytest.mark.parametrize("seed,eggs,distractors", [
    (1, 0, 0), (2, 1, 0), (3, 8, 4), (9, 10, 5), (17, 12, 6),
])
def test_backends_bit_identical_on_scenes(seed, eggs, distractors):
    cfg = DetectorConfig()
    scene = generate_scene(GeneratorParams(seed=seed), eggs, distractors)
    a = blob_stats_native(scene.image, cfg.template.dark_cut)
    b = blob_stats_pure(scene.image, cfg.template.dark_cut)
    assert a.n == b.n
    assert np.array_equal(a.labels, b.labels)
    for f in FIELDS:
        assert np.array_equal(getattr(a, f), getattr(b, f)), f


def test_backends_identical_on_adversarial_masks():
    rng = np.random.default_rng(5)
    # dense speckle: many touching blobs exercise the union-find merge paths
    img = np.where(rng.random((512, 512)) < 0.45, 0.1, 0.9)
    a = blob_stats_native(img, 0.3)
    b = blob_stats_pure(img, 0.3)
    assert a.n == b.n
    assert np.array_equal(a.labels, b.labels)
    for f in FIELDS:
        assert np.array_equal(getattr(a, f), getattr(b, f)), f


def test_heatmaps_identical_across_backends(monkeypatch):
    from ovinet.detector import blobs, heatmap

    cfg = DetectorConfig()
    scene = generate_scene(GeneratorParams(seed=23), 9, 5)
    monkeypatch.setattr(blobs, "_impl", blob_stats_native)
    hm_native = score_heatmap(scene.image, cfg)
    monkeypatch.setattr(blobs, "_impl", blob_stats_pure)
    hm_pure = score_heatmap(scene.image, cfg)
    assert np.array_equal(hm_native.scores, hm_pure.scores)


def test_benchmark_reports_both_backends():
    from ovinet.bench import format_benchmark, run_benchmark

    results = run_benchmark(repeats=3, n_scenes=2)
    assert {"pure", "native"} <= set(results["per_image_ms"])
    assert results["speedup"] > 1.0
    text = format_benchmark(results)
    assert "native" in text and "pure" in text
