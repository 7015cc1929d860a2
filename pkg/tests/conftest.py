import math

import pytest

from twclhv.events import OscillatorStrength, Settings


def strength(alpha_sq):
    return OscillatorStrength.from_alpha_sq(alpha_sq)


@pytest.fixture
def a03():
    return strength(0.3)


# twelve settings pairs; several fall outside 0 < theta2 < theta1 < pi/2
SETTINGS_GRID = [
    Settings(0.0, 0.0),
    Settings(math.pi / 3, math.pi / 6),
    Settings(math.pi / 6, math.pi / 3),
    Settings(math.pi / 2, 0.0),
    Settings(0.0, math.pi / 2),
    Settings(2.0, -1.0),
    Settings(-2.5, 0.4),
    Settings(3 * math.pi / 4, -math.pi / 4),
    Settings(5.0, 1.0),
    Settings(-1.2, -4.0),
    Settings(math.pi, 0.1),
    Settings(0.7, 0.7 + math.pi),
]
