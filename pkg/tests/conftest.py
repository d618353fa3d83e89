import math

import numpy as np
import pytest
from hypothesis import strategies as st

from overhead_mot import Detection, OrientedBox3D, SensorGeometry

GEOMETRY = SensorGeometry()


def person(x, y, yaw=0.0, score=1.0):
    return Detection(GEOMETRY.person_box(x, y, yaw), score)


def box2d(cx, cy, dx, dy, yaw=0.0):
    return OrientedBox3D(cx, cy, 0.0, dx, dy, 1.0, yaw)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


boxes = st.builds(
    box2d,
    st.floats(-5, 5),
    st.floats(-5, 5),
    st.floats(0.2, 3.0),
    st.floats(0.2, 3.0),
    st.floats(-math.pi, math.pi),
)


# one line per acceptance criterion, collected by tests/test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
