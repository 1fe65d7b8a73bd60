from __future__ import annotations

import json
import os
import stat
import sys
import textwrap

import numpy as np
import pytest

from conftest import gradient_image, random_images
from forgebench.distortions import gaussian_blur, gaussian_noise
from forgebench.errors import (
    BadOperationSpec,
    DimensionMismatch,
    PluginLaunchFailure,
    PluginTimeout,
    UnknownCategory,
)
from forgebench.operations import (
    OperationSpec,
    SeverityGrid,
    apply_operation,
    compose,
    load_grid,
    parse_grid,
)
from forgebench.plugins import extern_transform
from forgebench.rng import Rng64


def spec(category, label=None, **params):
    from forgebench.operations import _auto_label

    return OperationSpec(category, params, label or _auto_label(category, params))


# --- OperationSpec / grid --------------------------------------------------------


def test_unknown_category_rejected():
    with pytest.raises(UnknownCategory):
        OperationSpec("melt", {}, "x")


def test_param_schema_enforced():
    with pytest.raises(BadOperationSpec):
        OperationSpec("jpeg", {"sigma": 10}, "x")
    with pytest.raises(BadOperationSpec):
        OperationSpec("jpeg", {"quality": 60, "extra": 1}, "x")


def test_grid_requires_single_unaltered():
    entries = [OperationSpec("jpeg", {"quality": 60}, "q60")]
    with pytest.raises(BadOperationSpec):
        SeverityGrid(entries, includes_unaltered=True)


def test_grid_rejects_duplicate_cells():
    e = OperationSpec("jpeg", {"quality": 60}, "q60")
    with pytest.raises(BadOperationSpec):
        SeverityGrid([e, e], includes_unaltered=False)


def test_builtin_grids_load_and_hash_stably():
    g = load_grid("grid_image_table2")
    assert g.entries[0].category == "unaltered"
    labels = {(e.category, e.severity_label) for e in g.entries}
    assert ("jpeg", "q60") in labels
    assert ("gamma", "gamma0.75") in labels
    assert ("resize_cycle", "x16") in labels
    assert g.grid_hash() == load_grid("grid_image_table2").grid_hash()

    v = load_grid("grid_video_table3")
    assert ("video_flip", "vflip") in {(e.category, e.severity_label) for e in v.entries}


def test_unknown_grid_category_rejected():
    with pytest.raises(UnknownCategory):
        parse_grid({"categories": {"sharpen": {"amount": [1]}}})


def test_unconfigured_extern_entries_dropped_with_notice():
    doc = {
        "categories": {
            "extern_codec": {"template": None, "severities": [{"label": "high", "args": {}}]},
            "jpeg": {"quality": [60]},
        }
    }
    g = parse_grid(doc)
    assert g.dropped == ["extern_codec/high"]
    assert [(e.category, e.severity_label) for e in g.entries] == [
        ("unaltered", "unaltered"),
        ("jpeg", "q60"),
    ]
    kept = parse_grid(doc, drop_unconfigured=False)
    assert len(kept.entries) == 3


# --- compose ----------------------------------------------------------------------


def test_compose_empty_is_identity():
    img = random_images(1, seed=20)[0]
    out = compose(img, [], Rng64(1))
    assert np.array_equal(out.array, img.array)


def test_compose_identity_steps():
    img = random_images(1, seed=21)[0]
    steps = [spec("gamma", gamma=1.0), spec("linear_brightness", beta=0)]
    out = compose(img, steps, Rng64(1))
    assert np.array_equal(out.array, img.array)


def test_compose_matches_manual_two_step_application():
    img = gradient_image(32, 32, phase=7)
    root = Rng64(404)
    steps = [spec("gaussian_noise", sigma=10), spec("gaussian_blur", kernel=3)]
    out = compose(img, steps, root)
    manual = gaussian_blur(gaussian_noise(img, 10.0, root.derive("step/0")), 3)
    assert np.array_equal(out.array, manual.array)


def test_compose_annotates_failing_step():
    img = gradient_image(8, 8, phase=0)
    steps = [spec("gamma", gamma=1.0), spec("resize_cycle", factor=16)]
    with pytest.raises(Exception) as exc:
        compose(img, steps, Rng64(1))
    assert "step 1" in str(exc.value)


def test_apply_operation_media_kind_checked():
    img = gradient_image(8, 8, phase=0)
    with pytest.raises(BadOperationSpec):
        apply_operation(spec("video_grayscale", label="gray"), img, Rng64(1))


# --- extern plugins ------------------------------------------------------------------


def _write_script(path, body):
    with open(path, "w", encoding="utf-8") as f:
        f.write(textwrap.dedent(body))
    os.chmod(path, os.stat(path).st_mode | stat.S_IXUSR)


@pytest.fixture
def copy_plugin(tmp_path):
    script = tmp_path / "copy_plugin.py"
    _write_script(
        script,
        """\
        import shutil, sys
        shutil.copyfile(sys.argv[1], sys.argv[2])
        """,
    )
    return f"{sys.executable} {script} {{in}} {{out}}"


def test_extern_copy_plugin_is_identity(copy_plugin):
    img = gradient_image(12, 9, phase=1)
    out = extern_transform(img, copy_plugin)
    assert np.array_equal(out.array, img.array)


def test_extern_missing_plugin_reports_command_line():
    img = gradient_image(4, 4, phase=0)
    with pytest.raises(PluginLaunchFailure) as exc:
        extern_transform(img, "definitely-not-a-real-tool-7q1 {in} {out}")
    assert "definitely-not-a-real-tool-7q1" in str(exc.value)


def test_extern_dimension_mismatch_detected(tmp_path):
    script = tmp_path / "shrink.py"
    _write_script(
        script,
        """\
        import sys
        from PIL import Image
        Image.new("RGB", (1, 1), (0, 0, 0)).save(sys.argv[2])
        """,
    )
    img = gradient_image(4, 4, phase=0)
    with pytest.raises(DimensionMismatch):
        extern_transform(img, f"{sys.executable} {script} {{in}} {{out}}")


def test_extern_timeout(tmp_path):
    script = tmp_path / "sleepy.py"
    _write_script(script, "import time\ntime.sleep(30)\n")
    img = gradient_image(4, 4, phase=0)
    with pytest.raises(PluginTimeout):
        extern_transform(img, f"{sys.executable} {script} {{in}} {{out}}", timeout_s=0.5)


def test_extern_param_substitution(tmp_path):
    script = tmp_path / "gamma_plugin.py"
    _write_script(
        script,
        """\
        import sys
        import numpy as np
        from PIL import Image
        gamma = float(sys.argv[3])
        a = np.asarray(Image.open(sys.argv[1]).convert("RGB"), dtype=np.float64)
        out = np.floor(255.0 * (a / 255.0) ** gamma + 0.5).astype(np.uint8)
        Image.fromarray(out).save(sys.argv[2])
        """,
    )
    img = ImageConst = gradient_image(6, 6, phase=2)
    out = extern_transform(
        img, f"{sys.executable} {script} {{in}} {{out}} {{gamma}}", params={"gamma": "1.0"}
    )
    assert np.array_equal(out.array, img.array)


def test_plugin_path_env_resolution(tmp_path, monkeypatch):
    bin_dir = tmp_path / "plugbin"
    bin_dir.mkdir()
    tool = bin_dir / "fb-copy-tool"
    _write_script(
        tool,
        f"""\
        #!{sys.executable}
        import shutil, sys
        shutil.copyfile(sys.argv[1], sys.argv[2])
        """,
    )
    monkeypatch.setenv("FORGEBENCH_PLUGIN_PATH", str(bin_dir))
    img = gradient_image(5, 5, phase=3)
    out = extern_transform(img, "fb-copy-tool {in} {out}")
    assert np.array_equal(out.array, img.array)


def test_extern_codec_through_apply_operation(copy_plugin):
    img = gradient_image(10, 10, phase=4)
    op = OperationSpec(
        "extern_codec", {}, "high", template=copy_plugin, args={"level": "high"}
    )
    out = apply_operation(op, img, Rng64(1))
    assert np.array_equal(out.array, img.array)


def test_grid_json_spec_serialization_roundtrip():
    g = load_grid("grid_image_table2")
    for entry in g.entries:
        d = entry.to_json_dict()
        json.dumps(d)  # serializable
        assert d["category"] == entry.category
