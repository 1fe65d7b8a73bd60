"""Labeled test-set manifests.

JSONL, one item per line:

    {"id": "real/0001", "path": "real/0001.png", "label": "real", "media": "image"}

``media`` defaults to "image"; clip items point at a frame directory
(see :mod:`forgebench.video`). Relative paths are resolved against the
manifest file's directory.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .errors import DuplicateId, ParseError, UnknownLabel

LABELS = ("real", "fake")
MEDIA_KINDS = ("image", "clip")


@dataclass(frozen=True)
class ManifestItem:
    id: str
    path: str
    label: str  # "real" | "fake"
    media: str = "image"


@dataclass
class Manifest:
    items: list[ManifestItem] = field(default_factory=list)

    def __post_init__(self) -> None:
        seen = set()
        for item in self.items:
            if item.id in seen:
                raise DuplicateId(f"duplicate item id: {item.id!r}")
            seen.add(item.id)

    def __len__(self) -> int:
        return len(self.items)

    def count(self, label: str) -> int:
        return sum(1 for i in self.items if i.label == label)


def load_manifest(path: str) -> Manifest:
    base = os.path.dirname(os.path.abspath(path))
    items: list[ManifestItem] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as e:
                raise ParseError(f"{path}:{lineno}: invalid JSON: {e}") from e
            try:
                item_id = str(row["id"])
                raw_path = str(row["path"])
                label = str(row["label"])
            except KeyError as e:
                raise ParseError(f"{path}:{lineno}: missing field {e}") from e
            media = str(row.get("media", "image"))
            if label not in LABELS:
                raise UnknownLabel(f"{path}:{lineno}: label {label!r} not in {LABELS}")
            if media not in MEDIA_KINDS:
                raise ParseError(f"{path}:{lineno}: media {media!r} not in {MEDIA_KINDS}")
            if item_id in seen:
                raise DuplicateId(f"{path}:{lineno}: duplicate item id {item_id!r}")
            seen.add(item_id)
            if not os.path.isabs(raw_path):
                raw_path = os.path.join(base, raw_path)
            items.append(ManifestItem(id=item_id, path=raw_path, label=label, media=media))
    return Manifest(items)
