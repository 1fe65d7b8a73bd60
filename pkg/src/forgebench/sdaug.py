"""Stochastic degradation chain for training-data augmentation.

One plan per item: enhance -> blur -> noise -> jpeg, each stage included
with its own probability and, when included, parameterized uniformly at
random from its range. Plans are sampled from a fixed ten-draw layout so
a seed fully determines the plan and toggling one stage probability
never reshuffles the other stages' randomness:

    draw  1: enhance inclusion      (include iff u <= p_enhance)
    draw  2: enhance kind           (brightness if u <= 0.5 else contrast)
    draw  3: enhance factor         (0.5 + u, so (0.5, 1.5])
    draw  4: blur inclusion
    draw  5: blur kind              (gaussian if u <= 0.5 else average)
    draw  6: blur kernel            (odd k in [3, 15]: k = 3 + 2*min(floor(7u), 6))
    draw  7: noise inclusion
    draw  8: noise sigma            (50u, so (0, 50])
    draw  9: jpeg inclusion
    draw 10: jpeg quality           (10 + min(floor(86u), 85), so [10, 95])

All ten draws are consumed even for skipped stages. Uniforms are in
(0, 1], so inclusion ``u <= p`` is exact at both endpoints (p=0 never
fires, p=1 always fires).

When a plan is applied, the noise stage draws its field from the child
stream labeled ``noise`` of the stream handed to :func:`apply_chain`.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .distortions import (
    average_blur,
    brightness_scale,
    gaussian_blur,
    gaussian_noise,
    jpeg_cycle,
    linear_contrast,
)
from .errors import InvalidConfig
from .imaging import ImageBuffer, load_image, save_png
from .manifest import Manifest
from .rng import Rng64

SIDECAR_NAME = "sdaug_plans.jsonl"

STAGES = ("enhance", "blur", "noise", "jpeg")


@dataclass(frozen=True)
class ChainPlan:
    """A fully sampled chain; ``None`` marks a skipped stage."""

    enhance: dict | None = None  # {"kind": "brightness"|"contrast", "factor": float}
    blur: dict | None = None     # {"kind": "gaussian"|"average", "k": int}
    noise: dict | None = None    # {"sigma": float}
    jpeg: dict | None = None     # {"quality": int}

    def to_json_dict(self) -> dict:
        return {"enhance": self.enhance, "blur": self.blur, "noise": self.noise, "jpeg": self.jpeg}

    @staticmethod
    def from_json_dict(d: dict) -> "ChainPlan":
        return ChainPlan(
            enhance=d.get("enhance"),
            blur=d.get("blur"),
            noise=d.get("noise"),
            jpeg=d.get("jpeg"),
        )


@dataclass(frozen=True)
class SdaugConfig:
    p_enhance: float = 0.5
    p_blur: float = 0.5
    p_noise: float = 0.3
    p_jpeg: float = 0.7
    factor_range: tuple[float, float] = (0.5, 1.5)
    kernel_range: tuple[int, int] = (3, 15)
    sigma_range: tuple[float, float] = (0.0, 50.0)
    quality_range: tuple[int, int] = (10, 95)

    def __post_init__(self) -> None:
        for name in ("p_enhance", "p_blur", "p_noise", "p_jpeg"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise InvalidConfig(f"{name} must be in [0, 1], got {p}")
        for name in ("factor_range", "kernel_range", "sigma_range", "quality_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise InvalidConfig(f"{name} bounds out of order: ({lo}, {hi})")
        klo, khi = self.kernel_range
        if klo % 2 == 0 or khi % 2 == 0 or klo < 1:
            raise InvalidConfig(f"kernel_range must span odd sizes >= 1, got {self.kernel_range}")


def sample_chain(cfg: SdaugConfig, rng: Rng64) -> ChainPlan:
    """Draw one plan; consumes exactly ten uniforms (see module docstring)."""
    u = rng.uniforms(10)

    enhance = None
    if u[0] <= cfg.p_enhance:
        kind = "brightness" if u[1] <= 0.5 else "contrast"
        lo, hi = cfg.factor_range
        enhance = {"kind": kind, "factor": float(lo + u[2] * (hi - lo))}

    blur = None
    if u[3] <= cfg.p_blur:
        kind = "gaussian" if u[4] <= 0.5 else "average"
        klo, khi = cfg.kernel_range
        n_odd = (khi - klo) // 2 + 1
        k = klo + 2 * min(int(u[5] * n_odd), n_odd - 1)
        blur = {"kind": kind, "k": int(k)}

    noise = None
    if u[6] <= cfg.p_noise:
        lo, hi = cfg.sigma_range
        noise = {"sigma": float(lo + u[7] * (hi - lo))}

    jpeg = None
    if u[8] <= cfg.p_jpeg:
        qlo, qhi = cfg.quality_range
        span = qhi - qlo + 1
        jpeg = {"quality": int(qlo + min(int(u[9] * span), span - 1))}

    return ChainPlan(enhance=enhance, blur=blur, noise=noise, jpeg=jpeg)


def apply_chain(img: ImageBuffer, plan: ChainPlan, rng: Rng64) -> ImageBuffer:
    """Run the sampled stages in their fixed order."""
    stage = "enhance"
    try:
        if plan.enhance is not None:
            if plan.enhance["kind"] == "brightness":
                img = brightness_scale(img, float(plan.enhance["factor"]))
            else:
                img = linear_contrast(img, float(plan.enhance["factor"]))
        stage = "blur"
        if plan.blur is not None:
            k = int(plan.blur["k"])
            if plan.blur["kind"] == "gaussian":
                img = gaussian_blur(img, k)
            else:
                img = average_blur(img, k)
        stage = "noise"
        if plan.noise is not None:
            img = gaussian_noise(img, float(plan.noise["sigma"]), rng.derive("noise"))
        stage = "jpeg"
        if plan.jpeg is not None:
            img = jpeg_cycle(img, int(plan.jpeg["quality"]))
    except Exception as e:
        raise type(e)(f"{stage} stage: {e}") from e
    return img


@dataclass
class AugmentReport:
    n_items: int = 0
    stage_counts: dict = field(default_factory=lambda: {s: 0 for s in STAGES})
    failures: list = field(default_factory=list)  # (item_id, message)
    out_dir: str = ""
    seed: int = 0

    def to_json_dict(self) -> dict:
        return {
            "n_items": self.n_items,
            "stage_counts": dict(self.stage_counts),
            "failures": [{"id": i, "error": m} for i, m in self.failures],
            "out_dir": self.out_dir,
            "seed": self.seed,
        }


def _output_path(out_dir: str, item_id: str) -> str:
    # item ids may carry '/' to mirror a layout; refuse traversal
    rel = item_id.replace("\\", "/").strip("/")
    if ".." in rel.split("/"):
        raise InvalidConfig(f"item id {item_id!r} would escape the output directory")
    return os.path.join(out_dir, *rel.split("/")) + ".png"


def augment_dataset(
    manifest: Manifest,
    cfg: SdaugConfig,
    seed: int,
    out_dir: str,
    workers: int = 1,
) -> AugmentReport:
    """Materialize one augmented copy of every image in the manifest.

    Item ``i`` is driven by the child stream ``sdaug/<item_id>``, so
    outputs do not depend on ordering or worker count. A sidecar
    ``sdaug_plans.jsonl`` records every plan, one JSON object per item.
    """
    root = Rng64(seed)
    os.makedirs(out_dir, exist_ok=True)
    report = AugmentReport(out_dir=out_dir, seed=seed)
    plans: dict[str, ChainPlan | None] = {}

    def one(item) -> tuple[str, ChainPlan | None, str | None]:
        stream = root.derive(f"sdaug/{item.id}")
        plan = sample_chain(cfg, stream)
        try:
            img = load_image(item.path)
            out = apply_chain(img, plan, stream)
            path = _output_path(out_dir, item.id)
            os.makedirs(os.path.dirname(path), exist_ok=True)
            save_png(out, path)
        except Exception as e:
            return item.id, None, f"{type(e).__name__}: {e}"
        return item.id, plan, None

    if workers > 1 and len(manifest.items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, manifest.items))
    else:
        results = [one(item) for item in manifest.items]

    for item_id, plan, error in results:
        if error is not None:
            report.failures.append((item_id, error))
            plans[item_id] = None
            continue
        plans[item_id] = plan
        report.n_items += 1
        for stage in STAGES:
            if getattr(plan, stage) is not None:
                report.stage_counts[stage] += 1

    sidecar = os.path.join(out_dir, SIDECAR_NAME)
    with open(sidecar, "w", encoding="utf-8") as f:
        for item in manifest.items:  # manifest order, independent of workers
            plan = plans.get(item.id)
            if plan is None:
                continue
            row = {"id": item.id}
            row.update(plan.to_json_dict())
            f.write(json.dumps(row, sort_keys=True) + "\n")
    return report
