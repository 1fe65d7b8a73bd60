"""Out-of-process transform plugins.

Learned codecs, denoisers and video transcoders run as external
executables. A plugin is a command template: a plain text command line
with ``{in}`` and ``{out}`` placeholders (plus ``{crf}`` or arbitrary
named parameters), split into argv without any shell interpretation.
The exchange format is PNG for still images and a frame directory for
clips.

The executable (first argv token) is resolved against the directories in
``FORGEBENCH_PLUGIN_PATH`` (colon-separated) before the regular PATH.
"""

from __future__ import annotations

import os
import shlex
import shutil
import subprocess
import tempfile

from .errors import (
    DimensionMismatch,
    PluginBadOutput,
    PluginLaunchFailure,
    PluginNotConfigured,
    PluginTimeout,
)
from .imaging import ImageBuffer, load_image, save_png

DEFAULT_TIMEOUT_S = 120.0

PLUGIN_PATH_ENV = "FORGEBENCH_PLUGIN_PATH"


def resolve_executable(name: str) -> str:
    """Find ``name`` in FORGEBENCH_PLUGIN_PATH, then PATH; bare paths pass through."""
    if os.sep in name or (os.altsep and os.altsep in name):
        return name
    extra = os.environ.get(PLUGIN_PATH_ENV, "")
    for d in filter(None, extra.split(os.pathsep)):
        candidate = os.path.join(d, name)
        if os.path.isfile(candidate) and os.access(candidate, os.X_OK):
            return candidate
    found = shutil.which(name)
    return found if found else name


def build_command(template: str, substitutions: dict[str, str]) -> list[str]:
    """Split the template into argv and substitute ``{name}`` placeholders."""
    argv = []
    for token in shlex.split(template):
        for key, value in substitutions.items():
            token = token.replace("{" + key + "}", value)
        argv.append(token)
    if not argv:
        raise PluginNotConfigured("plugin command template is empty")
    argv[0] = resolve_executable(argv[0])
    return argv


def run_plugin(argv: list[str], timeout_s: float) -> None:
    """Run the command; map launch/exit/timeout failures to plugin errors."""
    pretty = " ".join(argv)
    try:
        proc = subprocess.run(
            argv,
            stdin=subprocess.DEVNULL,
            capture_output=True,
            timeout=timeout_s,
        )
    except FileNotFoundError as e:
        raise PluginLaunchFailure(f"cannot launch plugin: {pretty}") from e
    except subprocess.TimeoutExpired as e:
        raise PluginTimeout(f"plugin exceeded {timeout_s}s: {pretty}") from e
    if proc.returncode != 0:
        tail = proc.stderr.decode("utf-8", "replace")[-500:]
        raise PluginLaunchFailure(
            f"plugin exited with {proc.returncode}: {pretty}\n{tail}"
        )


def extern_transform(
    img: ImageBuffer,
    template: str | None,
    params: dict[str, str] | None = None,
    timeout_s: float = DEFAULT_TIMEOUT_S,
) -> ImageBuffer:
    """Round-trip one image through an external executable.

    Writes the input as PNG, substitutes {in}/{out} plus ``params`` into
    the template, runs it, and reads the PNG it produced. Output
    dimensions must match the input.
    """
    if not template:
        raise PluginNotConfigured("no command template configured for this operation")
    with tempfile.TemporaryDirectory(prefix="forgebench-plugin-") as tmp:
        in_path = os.path.join(tmp, "in.png")
        out_path = os.path.join(tmp, "out.png")
        save_png(img, in_path)
        subs = {"in": in_path, "out": out_path}
        subs.update(params or {})
        run_plugin(build_command(template, subs), timeout_s)
        if not os.path.exists(out_path):
            raise PluginBadOutput(f"plugin produced no output file: {out_path}")
        try:
            result = load_image(out_path)
        except Exception as e:
            raise PluginBadOutput(f"plugin output is not a decodable PNG: {e}") from e
    if (result.width, result.height) != (img.width, img.height):
        raise DimensionMismatch(
            f"plugin changed dimensions: {img.width}x{img.height} -> "
            f"{result.width}x{result.height}"
        )
    return result
