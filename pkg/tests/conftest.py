import math
import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from oriented_assign import RotatedBox  # noqa: E402


@st.composite
def boxes(draw, max_center=100.0, min_side=0.5, max_side=60.0):
    cx = draw(st.floats(-max_center, max_center))
    cy = draw(st.floats(-max_center, max_center))
    w = draw(st.floats(min_side, max_side))
    h = draw(st.floats(min_side, max_side))
    theta = draw(st.floats(-2 * math.pi, 2 * math.pi))
    return RotatedBox(cx, cy, w, h, theta)


def random_box(rng, center_scale=4.0, side=(0.5, 5.0)):
    return RotatedBox(
        float(rng.uniform(-center_scale, center_scale)),
        float(rng.uniform(-center_scale, center_scale)),
        float(rng.uniform(*side)),
        float(rng.uniform(*side)),
        float(rng.uniform(-math.pi, math.pi)),
    )


def random_spd(rng, lo=0.2, hi=5.0):
    vals = rng.uniform(lo, hi, 2)
    t = rng.uniform(0, math.pi)
    r = np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])
    s = r @ np.diag(vals) @ r.T
    return (s + s.T) / 2


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# (criterion, passed, detail) lines collected by test_acceptance
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n, ok, detail in sorted(ACCEPTANCE):
            terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
