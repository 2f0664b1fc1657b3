"""Benchmark the compiled blob kernel against the pure-Python fallback."""

from __future__ import annotations

import time

from .detector import DetectorConfig
from .detector.blobs import BACKEND, blob_stats_pure
from .synthgen import GeneratorParams, generate_scene


def run_benchmark(repeats: int = 40, n_scenes: int = 4, eggs: int = 10,
                  distractors: int = 5) -> dict:
    cfg = DetectorConfig()
    thr = cfg.template.dark_cut
    images = [
        generate_scene(GeneratorParams(seed=s), eggs, distractors,
                       scene_id=f"bench-{s}").image
        for s in range(n_scenes)
    ]

    impls = {"pure": blob_stats_pure}
    try:
        from .detector.blobs import blob_stats_native

        blob_stats_native(images[0], thr)     # force import before timing
        impls["native"] = blob_stats_native
    except ImportError:
        pass

    results = {"backend_in_use": BACKEND, "repeats": repeats,
               "scenes": n_scenes, "per_image_ms": {}}
    for name, fn in sorted(impls.items()):
        fn(images[0], thr)                    # warm-up
        t0 = time.perf_counter()
        for _ in range(repeats):
            for img in images:
                fn(img, thr)
        dt = time.perf_counter() - t0
        results["per_image_ms"][name] = 1000.0 * dt / (repeats * n_scenes)
    if "native" in results["per_image_ms"]:
        results["speedup"] = (results["per_image_ms"]["pure"]
                              / results["per_image_ms"]["native"])
    return results


def format_benchmark(results: dict) -> str:
    out = [
        "blob kernel benchmark (512x512 scenes)",
        f"  active backend: {results['backend_in_use']}",
        f"  repeats: {results['repeats']} x {results['scenes']} scenes",
    ]
    for name, ms in sorted(results["per_image_ms"].items()):
        out.append(f"  {name:>7}: {ms:8.3f} ms/image")
    if "speedup" in results:
        out.append(f"  speedup: {results['speedup']:.1f}x (native over pure)")
    return "\n".join(out)
