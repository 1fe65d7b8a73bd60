"""Severity-sweep runner: grid x manifest -> score records.

For every grid entry and manifest item the runner loads the media,
applies the entry's operation (the unaltered entry passes the original
bytes straight through), and asks the detector adapter for a score.
Distorted copies live only in memory unless a cache directory is given.

Determinism: the random stream for a sample is the child labeled
``op/<severity_label>/<item_id>`` of the run seed, so records do not
depend on scheduling or worker count. Results are assembled in
(grid entry, manifest item) order.

Failure policy: a crashed adapter is restarted up to twice per session,
retrying the in-flight sample; the third crash aborts the run. Timeouts
and protocol violations mark only that sample as failed (the session is
recycled) and the sweep continues.
"""

from __future__ import annotations

import hashlib
import os
import queue
import tempfile
import threading
from dataclasses import dataclass, field

from . import __version__
from .adapters import AdapterHello, AdapterSession
from .errors import (
    AdapterCrash,
    AdapterHandshakeFailure,
    AdapterReportedError,
    ForgebenchError,
    InvalidConfig,
    ProtocolViolation,
    SampleTimeout,
)
from .imaging import CodecParams, decode_image, encode_image, load_image, save_png
from .manifest import Manifest, ManifestItem
from .operations import UNALTERED, OperationSpec, SeverityGrid, apply_operation
from .rng import Rng64
from .video import VideoClip, frame_paths, load_clip

MAX_SESSION_RESTARTS = 2

CLIP_MODES = ("mean_frames", "adapter_clip")


@dataclass(frozen=True)
class ScoreRecord:
    item_id: str
    op_category: str
    severity_label: str
    score: float
    label: str

    def to_json_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "op_category": self.op_category,
            "severity": self.severity_label,
            "score": self.score,
            "label": self.label,
        }


@dataclass(frozen=True)
class FailureRecord:
    item_id: str
    op_category: str
    severity_label: str
    reason: str
    label: str

    def to_json_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "op_category": self.op_category,
            "severity": self.severity_label,
            "reason": self.reason,
            "label": self.label,
        }


@dataclass
class RunConfig:
    grid: SeverityGrid
    adapter_cmd: str
    seed: int = 0
    workers: int = 1
    cache_dir: str | None = None
    timeout_s: float = 60.0
    clip_mode: str = "mean_frames"
    frames_per_clip: int = 32
    plugin_timeout_s: float = 120.0

    def __post_init__(self) -> None:
        if self.workers < 1:
            raise InvalidConfig(f"workers must be >= 1, got {self.workers}")
        if self.timeout_s <= 0:
            raise InvalidConfig(f"timeout must be positive, got {self.timeout_s}")
        if self.clip_mode not in CLIP_MODES:
            raise InvalidConfig(f"clip_mode must be one of {CLIP_MODES}, got {self.clip_mode!r}")
        if self.frames_per_clip < 1:
            raise InvalidConfig(f"frames_per_clip must be >= 1, got {self.frames_per_clip}")


@dataclass
class SweepResult:
    records: list[ScoreRecord]
    failures: list[FailureRecord]
    hello: AdapterHello
    meta: dict = field(default_factory=dict)


def run_meta(cfg: RunConfig, manifest: Manifest, hello: AdapterHello) -> dict:
    """Reproducibility header embedded in records and reports (no timestamps)."""
    return {
        "tool_version": __version__,
        "seed": cfg.seed,
        "grid_name": cfg.grid.name,
        "grid_hash": cfg.grid.grid_hash(),
        "grid_entries": len(cfg.grid.entries),
        "grid_dropped": list(cfg.grid.dropped),
        "manifest_items": len(manifest),
        "clip_mode": cfg.clip_mode,
        "adapter": hello.to_json_dict(),
    }


def uniform_frame_indices(n_frames: int, k: int) -> list[int]:
    """k evenly spaced indices: floor(j * n / k); all frames when n <= k."""
    if n_frames <= k:
        return list(range(n_frames))
    return [(j * n_frames) // k for j in range(k)]


class _Sampler:
    """Per-worker state: one adapter session plus the shared run config."""

    def __init__(self, cfg: RunConfig, session: AdapterSession):
        self.cfg = cfg
        self.session = session
        self.restarts = 0

    def _restart(self, count_toward_budget: bool) -> None:
        self.session.kill()
        if count_toward_budget:
            self.restarts += 1
            if self.restarts > MAX_SESSION_RESTARTS:
                raise AdapterCrash(
                    f"adapter crashed {self.restarts} times; restart budget exhausted"
                )
        self.session = AdapterSession(self.cfg.adapter_cmd)
        try:
            self.session.start()
        except AdapterHandshakeFailure as e:
            raise AdapterCrash(f"adapter restart failed: {e}") from e

    # -- media preparation -------------------------------------------------------

    def _cache_path(self, item: ManifestItem, entry: OperationSpec) -> str | None:
        if not self.cfg.cache_dir or entry.category == UNALTERED or item.media != "image":
            return None
        key = hashlib.sha256(
            "\x00".join(
                [item.id, entry.category, entry.severity_label, str(self.cfg.seed)]
            ).encode("utf-8")
        ).hexdigest()
        return os.path.join(self.cfg.cache_dir, f"{key}.png")

    def _image_bytes(self, item: ManifestItem, entry: OperationSpec, rng: Rng64) -> bytes:
        if entry.category == UNALTERED:
            with open(item.path, "rb") as f:
                raw = f.read()
            if item.path.lower().endswith(".png"):
                return raw  # bitwise passthrough
            return encode_image(decode_image(raw), CodecParams("png"))
        cache_path = self._cache_path(item, entry)
        if cache_path and os.path.exists(cache_path):
            with open(cache_path, "rb") as f:
                return f.read()
        img = load_image(item.path)
        out = apply_operation(entry, img, rng, self.cfg.plugin_timeout_s)
        data = encode_image(out, CodecParams("png"))
        if cache_path:
            os.makedirs(self.cfg.cache_dir, exist_ok=True)
            tmp = cache_path + ".tmp"
            with open(tmp, "wb") as f:
                f.write(data)
            os.replace(tmp, cache_path)
        return data

    # -- scoring --------------------------------------------------------------------

    def _score_with_recycle(self, fn):
        """Run one adapter exchange, retrying through crashes per the budget."""
        while True:
            try:
                return fn()
            except AdapterCrash:
                self._restart(count_toward_budget=True)
            except (SampleTimeout, ProtocolViolation):
                # session state is unknowable; recycle it, fail just this sample
                self._restart(count_toward_budget=False)
                raise

    def score_image_sample(self, item: ManifestItem, entry: OperationSpec, rng: Rng64) -> float:
        data = self._image_bytes(item, entry, rng)
        req_id = f"{item.id}#{entry.category}/{entry.severity_label}"
        return self._score_with_recycle(
            lambda: self.session.score_image_bytes(req_id, data, self.cfg.timeout_s)
        )

    def score_clip_sample(self, item: ManifestItem, entry: OperationSpec, rng: Rng64) -> float:
        req_id = f"{item.id}#{entry.category}/{entry.severity_label}"
        k = self.cfg.frames_per_clip
        if entry.category == UNALTERED:
            paths = frame_paths(item.path)
            indices = uniform_frame_indices(len(paths), k)
            if self.cfg.clip_mode == "adapter_clip":
                sampled = [paths[i] for i in indices]
                return self._score_with_recycle(
                    lambda: self.session.score_clip(req_id, sampled, self.cfg.timeout_s)
                )
            scores = []
            for t in indices:
                with open(paths[t], "rb") as f:
                    data = f.read()
                scores.append(
                    self._score_with_recycle(
                        lambda d=data, t=t: self.session.score_image_bytes(
                            f"{req_id}#f{t}", d, self.cfg.timeout_s
                        )
                    )
                )
            return sum(scores) / len(scores)

        clip = load_clip(item.path)
        out: VideoClip = apply_operation(entry, clip, rng, self.cfg.plugin_timeout_s)
        indices = uniform_frame_indices(len(out.frames), k)
        if self.cfg.clip_mode == "adapter_clip":
            with tempfile.TemporaryDirectory(prefix="forgebench-clip-") as tmp:
                sampled = []
                for t in indices:
                    p = os.path.join(tmp, f"{t:06d}.png")
                    save_png(out.frames[t], p)
                    sampled.append(p)
                return self._score_with_recycle(
                    lambda: self.session.score_clip(req_id, sampled, self.cfg.timeout_s)
                )
        scores = []
        for t in indices:
            data = encode_image(out.frames[t], CodecParams("png"))
            scores.append(
                self._score_with_recycle(
                    lambda d=data, t=t: self.session.score_image_bytes(
                        f"{req_id}#f{t}", d, self.cfg.timeout_s
                    )
                )
            )
        return sum(scores) / len(scores)

    def score_sample(self, item: ManifestItem, entry: OperationSpec, root: Rng64) -> float:
        rng = root.derive(f"op/{entry.severity_label}/{item.id}")
        if item.media == "clip":
            return self.score_clip_sample(item, entry, rng)
        return self.score_image_sample(item, entry, rng)


def run_sweep(manifest: Manifest, cfg: RunConfig) -> SweepResult:
    """Score every (grid entry, manifest item) pair; returns ordered records."""
    entries = cfg.grid.entries
    items = manifest.items
    root = Rng64(cfg.seed)

    probe = AdapterSession(cfg.adapter_cmd)
    hello = probe.start()
    n_workers = 1 if hello.batch_max <= 1 else min(cfg.workers, max(1, len(items)))

    tasks: queue.SimpleQueue = queue.SimpleQueue()
    for ei in range(len(entries)):
        for ii in range(len(items)):
            tasks.put((ei, ii))
    results: dict[tuple[int, int], ScoreRecord | FailureRecord] = {}
    results_lock = threading.Lock()
    abort = threading.Event()
    fatal: list[BaseException] = []

    def worker(session: AdapterSession | None) -> None:
        try:
            sampler = _Sampler(cfg, session or AdapterSession(cfg.adapter_cmd))
            if session is None:
                sampler.session.start()
        except AdapterHandshakeFailure as e:
            fatal.append(AdapterCrash(f"worker session failed to start: {e}"))
            abort.set()
            return
        try:
            while not abort.is_set():
                try:
                    ei, ii = tasks.get_nowait()
                except queue.Empty:
                    break
                entry, item = entries[ei], items[ii]
                try:
                    score = sampler.score_sample(item, entry, root)
                    outcome: ScoreRecord | FailureRecord = ScoreRecord(
                        item.id, entry.category, entry.severity_label, score, item.label
                    )
                except AdapterCrash as e:
                    fatal.append(e)
                    abort.set()
                    return
                except (
                    SampleTimeout,
                    ProtocolViolation,
                    AdapterReportedError,
                    ForgebenchError,
                    OSError,
                ) as e:
                    outcome = FailureRecord(
                        item.id,
                        entry.category,
                        entry.severity_label,
                        f"{type(e).__name__}: {e}",
                        item.label,
                    )
                with results_lock:
                    results[(ei, ii)] = outcome
        finally:
            sampler.session.close()

    threads = []
    for w in range(n_workers):
        t = threading.Thread(target=worker, args=(probe if w == 0 else None,), daemon=True)
        threads.append(t)
        t.start()
    for t in threads:
        t.join()

    if fatal:
        raise fatal[0]

    records: list[ScoreRecord] = []
    failures: list[FailureRecord] = []
    for ei in range(len(entries)):
        for ii in range(len(items)):
            outcome = results.get((ei, ii))
            if outcome is None:  # only possible after an abort
                continue
            if isinstance(outcome, ScoreRecord):
                records.append(outcome)
            else:
                failures.append(outcome)

    return SweepResult(
        records=records,
        failures=failures,
        hello=hello,
        meta=run_meta(cfg, manifest, hello),
    )
