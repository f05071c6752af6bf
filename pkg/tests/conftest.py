from __future__ import annotations

from pathlib import Path

import pytest
from PIL import Image

from medrouter.demo import demo_registry
from medrouter.lexicon import default_lexicon

from helpers import TABLE1_STEMS, checkerboard, make_image, write_weights


@pytest.fixture(scope="session")
def table1_registry(tmp_path_factory):
    from medrouter.registry import scan_registry

    root = write_weights(tmp_path_factory.mktemp("table1"), TABLE1_STEMS)
    return scan_registry(root, default_lexicon())


@pytest.fixture(scope="session")
def demo(tmp_path_factory):
    dest = tmp_path_factory.mktemp("demo_registry")
    registry, lexicon = demo_registry(dest=dest)
    return registry, lexicon


@pytest.fixture(scope="session")
def images(tmp_path_factory) -> dict[str, Path]:
    root = tmp_path_factory.mktemp("images")
    out = {
        "white": make_image(root / "white.png", 255),
        "black": make_image(root / "black.png", 0),
        "checkerboard": make_image(root / "checkerboard.png", checkerboard()),
        "gray": make_image(root / "gray.png", 128),
        "color": make_image(root / "color.png", (200, 40, 90), mode="RGB"),
        "pgm": make_image(root / "sample.pgm", 255, fmt="PPM"),
    }
    gradient = [[x * 255 // 7 for x in range(8)] for _ in range(8)]
    out["gradient"] = make_image(root / "gradient.png", gradient)
    big = root / "white256.png"
    Image.new("L", (256, 256), color=255).save(big)
    out["white256"] = big
    return out


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Render one PASS/FAIL line per acceptance criterion at the end."""
    lines: list[tuple[str, str]] = []
    for status, label in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL"), ("skipped", "SKIP")):
        for report in terminalreporter.stats.get(status, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance" not in nodeid:
                continue
            when = getattr(report, "when", "call")
            if when == "call" or (label != "PASS" and when == "setup"):
                lines.append((nodeid.split("::")[-1], label))
    if not lines:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name, label in sorted(set(lines)):
        terminalreporter.write_line(f"[{label}] {name}")
