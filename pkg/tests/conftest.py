import numpy as np
import pytest

import lifichan as lc

PAPER_ROOM_SIZE = (5.8, 4.5, 3.1)


@pytest.fixture
def paper_room():
    """Conference room with carpet floor and bright walls/ceiling."""
    rho = {
        "floor": 0.3,
        "ceiling": 0.8,
        "wall_x0": 0.8,
        "wall_x1": 0.8,
        "wall_y0": 0.8,
        "wall_y1": 0.8,
    }
    return lc.Room(*PAPER_ROOM_SIZE, rho)


@pytest.fixture
def unit_cube_scene():
    """Small closed box with one downlink, coarse enough for brute force."""

    def build(dx=0.5, rho=0.6, tx_kw=None, rx_kw=None):
        room = lc.Room.uniform(1.0, 1.0, 1.0, rho)
        tx = lc.Emitter([0.5, 0.5, 0.9], [0.0, 0.0, -1.0], order=1.0, **(tx_kw or {}))
        rx = lc.Detector([0.3, 0.4, 0.1], [0.0, 0.0, 1.0], area=1e-4, **(rx_kw or {}))
        return lc.Scene.build(room, [tx], [rx], dx=dx)

    return build


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)
