from __future__ import annotations

import hashlib
import json
import os

import numpy as np
import pytest

from conftest import gradient_image, noise_image, write_manifest
from forgebench.distortions import gaussian_noise, jpeg_cycle
from forgebench.errors import InvalidConfig
from forgebench.imaging import ImageBuffer, load_image, save_png
from forgebench.manifest import Manifest, load_manifest
from forgebench.rng import Rng64
from forgebench.sdaug import (
    SIDECAR_NAME,
    ChainPlan,
    SdaugConfig,
    apply_chain,
    augment_dataset,
    sample_chain,
)


def test_config_validation():
    with pytest.raises(InvalidConfig):
        SdaugConfig(p_noise=1.2)
    with pytest.raises(InvalidConfig):
        SdaugConfig(kernel_range=(4, 14))
    with pytest.raises(InvalidConfig):
        SdaugConfig(sigma_range=(10, 5))


def test_all_zero_probabilities_give_empty_plan():
    cfg = SdaugConfig(p_enhance=0, p_blur=0, p_noise=0, p_jpeg=0)
    plan = sample_chain(cfg, Rng64(1))
    assert plan == ChainPlan()


def test_all_one_probabilities_deterministic():
    cfg = SdaugConfig(p_enhance=1, p_blur=1, p_noise=1, p_jpeg=1)
    a = sample_chain(cfg, Rng64(42))
    b = sample_chain(cfg, Rng64(42))
    assert a == b
    assert None not in (a.enhance, a.blur, a.noise, a.jpeg)


def test_sampled_parameters_stay_in_closed_ranges():
    # 250k plans x 4 always-on stages = 1e6 sampled stage parameters
    cfg = SdaugConfig(p_enhance=1, p_blur=1, p_noise=1, p_jpeg=1)
    rng = Rng64(7)
    kinds_e, kinds_b, kernels, qualities = set(), set(), set(), set()
    for _ in range(250_000):
        p = sample_chain(cfg, rng)
        assert 0.5 <= p.enhance["factor"] <= 1.5
        assert 3 <= p.blur["k"] <= 15 and p.blur["k"] % 2 == 1
        assert 0.0 <= p.noise["sigma"] <= 50.0
        assert 10 <= p.jpeg["quality"] <= 95
        kinds_e.add(p.enhance["kind"])
        kinds_b.add(p.blur["kind"])
        kernels.add(p.blur["k"])
        qualities.add(p.jpeg["quality"])
    assert kinds_e == {"brightness", "contrast"}
    assert kinds_b == {"gaussian", "average"}
    assert kernels == {3, 5, 7, 9, 11, 13, 15}
    assert qualities == set(range(10, 96))


def test_stage_draws_are_burned_when_skipped():
    # switching one stage off must not reshuffle the other stages
    rng_a = Rng64(99)
    rng_b = Rng64(99)
    with_noise = sample_chain(SdaugConfig(p_noise=1.0), rng_a)
    without = sample_chain(SdaugConfig(p_noise=0.0), rng_b)
    assert with_noise.enhance == without.enhance
    assert with_noise.blur == without.blur
    assert with_noise.jpeg == without.jpeg
    assert with_noise.noise is not None and without.noise is None


def test_inclusion_frequencies_near_defaults():
    cfg = SdaugConfig()
    rng = Rng64(123)
    n = 20_000
    counts = {"enhance": 0, "blur": 0, "noise": 0, "jpeg": 0}
    for _ in range(n):
        p = sample_chain(cfg, rng)
        for stage in counts:
            counts[stage] += getattr(p, stage) is not None
    assert abs(counts["enhance"] / n - 0.5) < 0.02
    assert abs(counts["blur"] / n - 0.5) < 0.02
    assert abs(counts["noise"] / n - 0.3) < 0.02
    assert abs(counts["jpeg"] / n - 0.7) < 0.02


def test_apply_chain_identity_cases():
    img = noise_image(24, 24, seed=70)
    assert np.array_equal(apply_chain(img, ChainPlan(), Rng64(1)).array, img.array)
    unit = ChainPlan(enhance={"kind": "brightness", "factor": 1.0})
    assert np.array_equal(apply_chain(img, unit, Rng64(1)).array, img.array)


def test_apply_chain_matches_manual_sequence():
    img = ImageBuffer.constant(32, 32, (128, 128, 128))
    plan = ChainPlan(noise={"sigma": 10.0}, jpeg={"quality": 50})
    stream = Rng64(2024).derive("sdaug/item")
    out = apply_chain(img, plan, stream)
    manual = jpeg_cycle(gaussian_noise(img, 10.0, stream.derive("noise")), 50)
    assert np.array_equal(out.array, manual.array)


def test_apply_chain_stage_error_is_annotated():
    img = ImageBuffer.constant(4, 4, (1, 1, 1))
    bad = ChainPlan(blur={"kind": "gaussian", "k": 4})
    with pytest.raises(Exception) as exc:
        apply_chain(img, bad, Rng64(1))
    assert "blur stage" in str(exc.value)


# --- dataset materialization -----------------------------------------------------


def _tree_digest(root: str) -> str:
    h = hashlib.sha256()
    for dirpath, dirnames, filenames in sorted(os.walk(root)):
        dirnames.sort()
        for name in sorted(filenames):
            p = os.path.join(dirpath, name)
            h.update(os.path.relpath(p, root).encode())
            with open(p, "rb") as f:
                h.update(f.read())
    return h.hexdigest()


@pytest.fixture
def small_manifest(tmp_path):
    rows = []
    for i in range(6):
        img = gradient_image(20, 20, phase=i) if i % 2 else noise_image(20, 20, seed=i)
        p = tmp_path / f"img_{i}.png"
        save_png(img, str(p))
        rows.append(
            {"id": f"item{i}", "path": p.name, "label": "real" if i % 2 else "fake"}
        )
    return load_manifest(write_manifest(str(tmp_path / "m.jsonl"), rows))


def test_augment_empty_manifest(tmp_path):
    report = augment_dataset(Manifest([]), SdaugConfig(), 1, str(tmp_path / "out"))
    assert report.n_items == 0
    assert report.stage_counts == {"enhance": 0, "blur": 0, "noise": 0, "jpeg": 0}


def test_augment_deterministic_and_worker_invariant(tmp_path, small_manifest):
    d1, d2, d3 = (str(tmp_path / n) for n in ("o1", "o2", "o3"))
    augment_dataset(small_manifest, SdaugConfig(), 7, d1, workers=1)
    augment_dataset(small_manifest, SdaugConfig(), 7, d2, workers=1)
    augment_dataset(small_manifest, SdaugConfig(), 7, d3, workers=4)
    assert _tree_digest(d1) == _tree_digest(d2) == _tree_digest(d3)


def test_augment_sidecar_replays_to_same_output(tmp_path, small_manifest):
    out = str(tmp_path / "aug")
    augment_dataset(small_manifest, SdaugConfig(), 11, out)
    sidecar = os.path.join(out, SIDECAR_NAME)
    plans = {}
    with open(sidecar) as f:
        for line in f:
            row = json.loads(line)
            plans[row.pop("id")] = ChainPlan.from_json_dict(row)
    root = Rng64(11)
    for item in small_manifest.items:
        stream = root.derive(f"sdaug/{item.id}")
        replay_stream = stream.derive("does-not-matter")  # children are state-free
        sample_stream = root.derive(f"sdaug/{item.id}")
        replayed = apply_chain(load_image(item.path), plans[item.id], sample_stream)
        written = load_image(os.path.join(out, f"{item.id}.png"))
        assert np.array_equal(replayed.array, written.array)


def test_augment_zero_jpeg_probability(tmp_path, small_manifest):
    out = str(tmp_path / "nojpeg")
    report = augment_dataset(small_manifest, SdaugConfig(p_jpeg=0.0), 3, out)
    assert report.stage_counts["jpeg"] == 0
    with open(os.path.join(out, SIDECAR_NAME)) as f:
        assert all(json.loads(line)["jpeg"] is None for line in f)


def test_augment_collects_io_errors(tmp_path, small_manifest):
    items = list(small_manifest.items)
    broken = items[0]
    items[0] = type(broken)(id="missing", path=str(tmp_path / "nope.png"), label="real")
    report = augment_dataset(Manifest(items), SdaugConfig(), 5, str(tmp_path / "werr"))
    assert report.n_items == len(items) - 1
    assert len(report.failures) == 1 and report.failures[0][0] == "missing"


def test_augment_thousand_items_jpeg_binomial_bound(tmp_path):
    rows = []
    img = gradient_image(8, 8, phase=1)
    p = tmp_path / "one.png"
    save_png(img, str(p))
    for i in range(1000):
        rows.append({"id": f"i{i:04d}", "path": p.name, "label": "real"})
    manifest = load_manifest(write_manifest(str(tmp_path / "big.jsonl"), rows))
    report = augment_dataset(manifest, SdaugConfig(), 2024, str(tmp_path / "bigout"), workers=4)
    assert 650 <= report.stage_counts["jpeg"] <= 750
