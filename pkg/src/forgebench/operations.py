"""Operation catalog: named degradations, severity grids, dispatch.

An :class:`OperationSpec` is one cell of a sweep: a category, a small
parameter map and a human-readable severity label ("q60", "sigma10").
A :class:`SeverityGrid` is the ordered list of cells evaluated in one
run, optionally headed by the "unaltered" pseudo-operation.

Grids are declared in JSON (see ``grids/grid_image_table2.json``): per
category either a list of values for the category's single knob, or an
explicit ``severities`` list of parameter objects. External operations
carry a command template; entries whose template is null are dropped at
load time (and reported) unless ``drop_unconfigured=False``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources

from . import distortions, video
from .errors import BadOperationSpec, UnknownCategory
from .imaging import ImageBuffer
from .plugins import DEFAULT_TIMEOUT_S, extern_transform
from .rng import Rng64
from .video import VideoClip

UNALTERED = "unaltered"

# category -> (required params, optional params)
_SCHEMAS: dict[str, tuple[set[str], set[str]]] = {
    UNALTERED: (set(), set()),
    "jpeg": ({"quality"}, set()),
    "extern_codec": (set(), set()),
    "gaussian_noise": ({"sigma"}, set()),
    "poisson_gaussian_noise": ({"a", "b"}, set()),
    "gaussian_blur": ({"kernel"}, set()),
    "dncnn_extern": (set(), set()),
    "gamma": ({"gamma"}, set()),
    "linear_brightness": ({"beta"}, set()),
    "linear_contrast": ({"alpha"}, set()),
    "resize_cycle": ({"factor"}, set()),
    "combo": (set(), set()),
    "video_compression": ({"crf"}, set()),
    "video_flip": ({"axis"}, set()),
    "video_grayscale": (set(), set()),
    "video_vintage": (set(), set()),
    "video_brightness": ({"direction"}, {"amount"}),
    "video_contrast": ({"alpha"}, set()),
    "video_noise": ({"sigma"}, set()),
    "video_resolution": ({"factor"}, {"mode"}),
}

_EXTERN_CATEGORIES = {"extern_codec", "dncnn_extern", "video_compression"}

VIDEO_CATEGORIES = {c for c in _SCHEMAS if c.startswith("video_")}


@dataclass(frozen=True)
class OperationSpec:
    """One degradation at one severity."""

    category: str
    params: dict
    severity_label: str
    steps: tuple["OperationSpec", ...] | None = None  # combo only
    template: str | None = None  # external operations only
    args: dict | None = None  # extra text substitutions for external ops
    non_paper_default: bool = False

    def __post_init__(self) -> None:
        if self.category not in _SCHEMAS:
            raise UnknownCategory(f"unknown operation category: {self.category!r}")
        required, optional = _SCHEMAS[self.category]
        keys = set(self.params)
        if not required <= keys or not keys <= required | optional:
            raise BadOperationSpec(
                f"{self.category}: params {sorted(keys)} do not match schema "
                f"(required {sorted(required)}, optional {sorted(optional)})"
            )
        if self.category == "combo" and not isinstance(self.steps, tuple):
            raise BadOperationSpec("combo requires a tuple of steps")

    @property
    def is_video(self) -> bool:
        return self.category in VIDEO_CATEGORIES

    def to_json_dict(self) -> dict:
        d: dict = {"category": self.category, "severity": self.severity_label}
        if self.params:
            d["params"] = dict(sorted(self.params.items()))
        if self.steps is not None:
            d["steps"] = [s.to_json_dict() for s in self.steps]
        if self.template is not None:
            d["template"] = self.template
        if self.args:
            d["args"] = dict(sorted(self.args.items()))
        return d


@dataclass
class SeverityGrid:
    entries: list[OperationSpec]
    includes_unaltered: bool = True
    name: str = "custom"
    dropped: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        n_unaltered = sum(1 for e in self.entries if e.category == UNALTERED)
        if self.includes_unaltered and n_unaltered != 1:
            raise BadOperationSpec(
                f"grid must contain the unaltered entry exactly once, found {n_unaltered}"
            )
        labels = [(e.category, e.severity_label) for e in self.entries]
        if len(set(labels)) != len(labels):
            raise BadOperationSpec("duplicate (category, severity) cell in grid")

    def grid_hash(self) -> str:
        canonical = json.dumps(
            [e.to_json_dict() for e in self.entries], sort_keys=True, separators=(",", ":")
        )
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


# --- grid JSON loading ---------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, float) and v.is_integer():
        v = int(v)
    return str(v)


def _auto_label(category: str, params: dict) -> str:
    if category == "jpeg":
        return f"q{_fmt(params['quality'])}"
    if category in ("gaussian_noise", "video_noise"):
        return f"sigma{_fmt(params['sigma'])}"
    if category == "gaussian_blur":
        return f"k{_fmt(params['kernel'])}"
    if category == "gamma":
        return f"gamma{_fmt(params['gamma'])}"
    if category == "linear_brightness":
        beta = params["beta"]
        sign = "+" if beta >= 0 else "-"
        return f"beta{sign}{_fmt(abs(beta))}"
    if category in ("linear_contrast", "video_contrast"):
        return f"alpha{_fmt(params['alpha'])}"
    if category in ("resize_cycle", "video_resolution"):
        return f"x{_fmt(params['factor'])}"
    if category == "poisson_gaussian_noise":
        return f"a{_fmt(params['a'])}_b{_fmt(params['b'])}"
    if category == "video_compression":
        return f"crf{_fmt(params['crf'])}"
    if category == "video_flip":
        return "hflip" if params["axis"] == "horizontal" else "vflip"
    if category == "video_brightness":
        return "light" if params["direction"] == "lighten" else "dark"
    if category == "video_grayscale":
        return "gray"
    if category == "video_vintage":
        return "vintage"
    raise BadOperationSpec(f"no automatic label for category {category}")


_SINGLE_KNOB = {
    "jpeg": "quality",
    "gaussian_noise": "sigma",
    "gaussian_blur": "kernel",
    "gamma": "gamma",
    "linear_brightness": "beta",
    "linear_contrast": "alpha",
    "resize_cycle": "factor",
    "video_compression": "crf",
    "video_contrast": "alpha",
    "video_noise": "sigma",
    "video_flip": "axis",
    "video_resolution": "factor",
}


def _severity_dicts(category: str, block: dict) -> list[dict]:
    """Normalize one category block to a list of explicit severity dicts."""
    if "severities" in block:
        return list(block["severities"])
    if category == "combo":
        return list(block.get("chains", []))
    knob = _SINGLE_KNOB.get(category)
    if knob and knob in block:
        return [{knob: v} for v in block[knob]]
    if category == "poisson_gaussian_noise" and "presets" in block:
        return list(block["presets"])
    # parameterless categories (grayscale, vintage) or extern with no levels
    return [{}]


def _parse_step(raw: dict) -> OperationSpec:
    raw = dict(raw)
    category = raw.pop("category")
    raw.pop("label", None)
    spec = _make_spec(category, raw, label=None, template=None)
    return spec


def _make_spec(
    category: str,
    sev: dict,
    label: str | None,
    template: str | None,
    non_paper: bool = False,
) -> OperationSpec:
    sev = dict(sev)
    label = sev.pop("label", label)
    non_paper = bool(sev.pop("non_paper_default", non_paper))
    steps = None
    args = None
    if category == "combo":
        steps = tuple(_parse_step(s) for s in sev.pop("steps"))
        if label is None:
            raise BadOperationSpec("combo chains need an explicit label")
    if category in _EXTERN_CATEGORIES and category != "video_compression":
        args = {k: str(v) for k, v in sev.pop("args", {}).items()}
    params = sev
    if label is None:
        label = _auto_label(category, params)
    return OperationSpec(
        category=category,
        params=params,
        severity_label=label,
        steps=steps,
        template=template,
        args=args,
        non_paper_default=non_paper,
    )


def load_grid(source: str, drop_unconfigured: bool = True) -> SeverityGrid:
    """Load a grid from a JSON file path or a built-in grid name."""
    if source in ("grid_image_table2", "grid_video_table3"):
        text = resources.files("forgebench.grids").joinpath(f"{source}.json").read_text("utf-8")
    else:
        with open(source, encoding="utf-8") as f:
            text = f.read()
    doc = json.loads(text)
    return parse_grid(doc, drop_unconfigured=drop_unconfigured)


def parse_grid(doc: dict, drop_unconfigured: bool = True) -> SeverityGrid:
    include_unaltered = bool(doc.get("include_unaltered", True))
    entries: list[OperationSpec] = []
    dropped: list[str] = []
    if include_unaltered:
        entries.append(OperationSpec(UNALTERED, {}, UNALTERED))
    for category, block in doc.get("categories", {}).items():
        if category not in _SCHEMAS or category == UNALTERED:
            raise UnknownCategory(f"unknown operation category in grid: {category!r}")
        block = dict(block)
        template = block.pop("template", None)
        non_paper = bool(block.pop("non_paper_default", False))
        for sev in _severity_dicts(category, block):
            spec = _make_spec(category, sev, None, template, non_paper)
            if category in _EXTERN_CATEGORIES and template is None and drop_unconfigured:
                dropped.append(f"{category}/{spec.severity_label}")
                continue
            entries.append(spec)
    return SeverityGrid(
        entries,
        includes_unaltered=include_unaltered,
        name=doc.get("name", "custom"),
        dropped=dropped,
    )


# --- dispatch ---------------------------------------------------------------

def apply_operation(
    spec: OperationSpec,
    media: ImageBuffer | VideoClip,
    rng: Rng64,
    timeout_s: float = DEFAULT_TIMEOUT_S,
):
    """Apply one operation to one media sample; pure given (media, spec, rng)."""
    if spec.category == UNALTERED:
        return media
    if spec.is_video != isinstance(media, VideoClip):
        kind = "clip" if spec.is_video else "image"
        raise BadOperationSpec(f"{spec.category} requires {kind} media")
    p = spec.params
    c = spec.category
    if c == "jpeg":
        return distortions.jpeg_cycle(media, int(p["quality"]))
    if c == "gaussian_noise":
        return distortions.gaussian_noise(media, float(p["sigma"]), rng)
    if c == "poisson_gaussian_noise":
        return distortions.poisson_gaussian_noise(media, float(p["a"]), float(p["b"]), rng)
    if c == "gaussian_blur":
        return distortions.gaussian_blur(media, int(p["kernel"]))
    if c == "gamma":
        return distortions.gamma_correct(media, float(p["gamma"]))
    if c == "linear_brightness":
        return distortions.linear_brightness(media, float(p["beta"]))
    if c == "linear_contrast":
        return distortions.linear_contrast(media, float(p["alpha"]))
    if c == "resize_cycle":
        return distortions.resize_cycle(media, int(p["factor"]))
    if c in ("extern_codec", "dncnn_extern"):
        return extern_transform(media, spec.template, spec.args, timeout_s)
    if c == "combo":
        return compose(media, list(spec.steps or ()), rng, timeout_s)
    if c == "video_compression":
        return video.transcode(media, int(p["crf"]), spec.template, timeout_s)
    if c == "video_flip":
        return video.flip(media, str(p["axis"]))
    if c == "video_grayscale":
        return video.grayscale(media)
    if c == "video_vintage":
        return video.vintage(media)
    if c == "video_brightness":
        amount = p.get("amount")
        return video.brightness_video(media, str(p["direction"]), amount)
    if c == "video_contrast":
        return video.contrast_video(media, float(p["alpha"]))
    if c == "video_noise":
        return video.temporal_noise(media, float(p["sigma"]), rng)
    if c == "video_resolution":
        return video.resolution_reduce(media, int(p["factor"]), str(p.get("mode", "keep")))
    raise UnknownCategory(spec.category)


def compose(
    media: ImageBuffer | VideoClip,
    steps: list[OperationSpec],
    rng: Rng64,
    timeout_s: float = DEFAULT_TIMEOUT_S,
):
    """Apply ``steps`` left to right; step ``i`` draws from child stream ``step/<i>``."""
    for i, step in enumerate(steps):
        try:
            media = apply_operation(step, media, rng.derive(f"step/{i}"), timeout_s)
        except Exception as e:
            raise type(e)(f"step {i} ({step.category}/{step.severity_label}): {e}") from e
    return media
