"""Integrating-sphere closed form for diffuse reflections of order >= 3.

The room is treated as a diffusely reflecting cavity: after the first two
bounces (handled elsewhere patch by patch), the remaining reverberant power
decays exponentially, which in the frequency domain is a first-order
low-pass response. The model depends only on a few room-level parameters
and on the receiver area, never on device orientations, so it is computed
once per scene and reused for every link and pose.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import coupling
from .errors import DivergentCavityError, GeometryError
from .response import TransferFunction
from .scene import FACE_NAMES, Emitter, FrequencyGrid, Room, Scene, average_reflectivity

SPEED_OF_LIGHT = 299_792_458.0


def tail_gain(rho1: float, avg_rho: float, rx_area: float, room_area: float) -> float:
    """DC gain of all diffuse reflections excluding the first two.

    ``rho1`` is the reflectivity of the region the transmitter illuminates
    first, ``avg_rho`` the area-weighted average reflectivity of the room.
    """
    if not 0.0 <= avg_rho < 1.0:
        raise DivergentCavityError(f"average reflectivity {avg_rho} outside [0, 1)")
    if not 0.0 <= rho1 < 1.0:
        raise GeometryError(f"rho1 {rho1} outside [0, 1)")
    if rx_area <= 0.0 or room_area <= 0.0:
        raise GeometryError("areas must be positive")
    return rho1 * (rx_area / room_area) * avg_rho**2 / (1.0 - avg_rho)


def tail_gain_expanded(rho1: float, avg_rho: float, rx_area: float, room_area: float) -> float:
    """Same gain written as the full geometric series minus its first two
    terms; algebraically identical to :func:`tail_gain`."""
    if not 0.0 <= avg_rho < 1.0:
        raise DivergentCavityError(f"average reflectivity {avg_rho} outside [0, 1)")
    return rho1 * (rx_area / room_area) * (1.0 / (1.0 - avg_rho) - 1.0 - avg_rho)


def mean_reflection_interval(room: Room) -> float:
    """Mean time between successive diffuse reflections, 4V / (c * A).

    This is the room-acoustics mean-free-path constant; it is isolated here
    so an alternative constant can be swapped in without touching callers.
    """
    return 4.0 * room.volume / (SPEED_OF_LIGHT * room.surface_area)


def decay_time(room: Room, avg_rho: float) -> float:
    """Exponential decay time of the reverberant optical power."""
    if avg_rho == 0.0:
        return 0.0
    if not 0.0 < avg_rho < 1.0:
        raise DivergentCavityError(f"average reflectivity {avg_rho} outside [0, 1)")
    return -mean_reflection_interval(room) / math.log(avg_rho)


def initially_lit_face(scene: Scene, tx: Emitter) -> int:
    """Index of the face receiving the largest direct DC flux from ``tx``.

    Deterministic tie-break: the first face in :data:`FACE_NAMES` order.
    """
    gains, _ = coupling.emitter_to_patches(tx, scene.patches)
    flux = np.zeros(len(FACE_NAMES))
    np.add.at(flux, scene.patches.face, gains)
    return int(np.argmax(flux))


@dataclass(frozen=True)
class SphereParams:
    """Parameters of the higher-order diffuse tail for one room/receiver."""

    gain: float  # DC gain of the tail
    decay: float  # exponential decay time in seconds
    rho1: float
    avg_reflectivity: float
    rx_area: float
    room_area: float
    delay_offset: float = 0.0  # optional extra propagation delay, default none

    def __post_init__(self):
        if self.gain < 0.0 or self.decay < 0.0 or self.delay_offset < 0.0:
            raise GeometryError("sphere parameters must be nonnegative")


def params_for_scene(
    scene: Scene,
    tx: Emitter,
    rx_area: float,
    rho1: Optional[float] = None,
    delay_offset: bool = False,
) -> SphereParams:
    """Sphere-model parameters for one emitter and receiver area.

    ``rho1`` defaults to the reflectivity of the face the emitter
    illuminates most strongly; pass a value to override. Setting
    ``delay_offset`` adds a propagation delay of twice the mean reflection
    interval to the tail (off by default; the base model has none).
    """
    avg_rho = average_reflectivity(scene.patches)
    if rho1 is None:
        face = initially_lit_face(scene, tx)
        rho1 = scene.room.reflectivity[FACE_NAMES[face]]
    room_area = scene.room.surface_area
    return SphereParams(
        gain=tail_gain(rho1, avg_rho, rx_area, room_area),
        decay=decay_time(scene.room, avg_rho),
        rho1=rho1,
        avg_reflectivity=avg_rho,
        rx_area=rx_area,
        room_area=room_area,
        delay_offset=2.0 * mean_reflection_interval(scene.room) if delay_offset else 0.0,
    )


def tail_response(params: SphereParams, grid: FrequencyGrid) -> TransferFunction:
    """First-order low-pass response of the diffuse tail on ``grid``."""
    f = grid.samples
    values = params.gain / (1.0 + 2j * math.pi * f * params.decay)
    if params.delay_offset > 0.0:
        values = values * np.exp((-2j * math.pi * params.delay_offset) * f)
    return TransferFunction(grid, tail=values)
