"""Frequency-domain evaluation of the first two diffuse reflections.

All mutual patch couplings are assembled once per scene into an intrinsic
gain/delay operator; per frequency the complex phasor matrix is synthesized
on the fly inside the matrix-vector product, never stored. Emitter-side
source fields are cached so that MIMO links and receiver movement only cost
one dot product per pose and frequency.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _kernels, coupling
from .errors import CapacityError, SceneMismatchError
from .response import TransferFunction
from .scene import Detector, Emitter, FrequencyGrid, Scene

#: Default ceiling for the intrinsic-operator memory, overridable via the
#: LIFICHAN_MEMORY_BUDGET_MB environment variable or a per-call argument.
DEFAULT_MEMORY_BUDGET_BYTES = 4 * 1024**3


def estimate_memory_bytes(n_patches: int) -> int:
    """Bytes needed for the gain/delay matrices plus the per-frequency
    complex workspace of the numpy backend (the worst case)."""
    return 40 * n_patches * n_patches


def _memory_budget(override: Optional[int]) -> int:
    if override is not None:
        return int(override)
    env = os.environ.get("LIFICHAN_MEMORY_BUDGET_MB")
    if env is not None:
        return int(float(env) * 1024**2)
    return DEFAULT_MEMORY_BUDGET_BYTES


@dataclass(frozen=True)
class IntrinsicOperator:
    """Cached N x N patch-to-patch gain and delay matrices for one scene.

    ``gain[i, k]`` is the DC coupling of patch k seen by patch i and
    ``delay[i, k]`` the corresponding propagation time; both diagonals are
    zero. Built exactly once per scene and reused across all emitters,
    detectors, and receiver positions.
    """

    scene: Scene
    gain: np.ndarray
    delay: np.ndarray
    reflectivity: np.ndarray

    def __post_init__(self):
        for arr in (self.gain, self.delay, self.reflectivity):
            arr.flags.writeable = False

    @property
    def n_patches(self) -> int:
        return self.gain.shape[0]

    @property
    def memory_bytes(self) -> int:
        return self.gain.nbytes + self.delay.nbytes


def build_intrinsic(scene: Scene, memory_budget: Optional[int] = None) -> IntrinsicOperator:
    """Assemble the intrinsic operator for ``scene``.

    Raises :class:`CapacityError` before allocating anything when the
    matrices plus workspace would exceed the memory budget.
    """
    patches = scene.patches
    n = len(patches)
    required = estimate_memory_bytes(n)
    budget = _memory_budget(memory_budget)
    if required > budget:
        raise CapacityError(n, required, budget)
    gain, delay = _kernels.intrinsic_matrices(patches.centers, patches.normals, patches.areas)
    return IntrinsicOperator(scene, gain, delay, np.array(patches.reflectivity))


@dataclass(frozen=True)
class SourceField:
    """Per-frequency diffuse field generated by one emitter.

    ``values[fi, k]`` is the complex amplitude re-radiated towards the
    receiver side by patch k at grid frequency ``fi``, summed over bounce
    orders 1..``bounces``. Independent of any detector, so one field serves
    every receiver position.
    """

    operator: IntrinsicOperator
    emitter: Emitter
    grid: FrequencyGrid
    values: np.ndarray  # (n_freqs, n_patches) complex
    bounces: int

    def __post_init__(self):
        self.values.flags.writeable = False


def _check_same_scene(scene: Scene, device, what: str) -> None:
    if not scene.room.contains(device.position):
        raise SceneMismatchError(
            f"{what} at {device.position.tolist()} lies outside the operator's room"
        )


def source_fields(
    operator: IntrinsicOperator,
    emitters: Sequence[Emitter],
    grid: FrequencyGrid,
    bounces: int = 2,
) -> list[SourceField]:
    """Source fields for several emitters in one pass.

    The per-frequency phasor synthesis is shared across the whole batch,
    which is what makes MIMO scenes barely more expensive than SISO.
    """
    for tx in emitters:
        _check_same_scene(operator.scene, tx, "emitter")
    patches = operator.scene.patches
    t_gains = np.empty((len(patches), len(emitters)))
    t_delays = np.empty((len(patches), len(emitters)))
    for e, tx in enumerate(emitters):
        t_gains[:, e], t_delays[:, e] = coupling.emitter_to_patches(tx, patches)
    values = _kernels.source_field_sweep(
        operator.gain,
        operator.delay,
        operator.reflectivity,
        t_gains,
        t_delays,
        grid.samples,
        bounces,
    )
    return [
        SourceField(operator, tx, grid, np.ascontiguousarray(values[:, :, e]), bounces)
        for e, tx in enumerate(emitters)
    ]


def source_field(
    operator: IntrinsicOperator, tx: Emitter, grid: FrequencyGrid, bounces: int = 2
) -> SourceField:
    """Source field of a single emitter (see :func:`source_fields`)."""
    return source_fields(operator, [tx], grid, bounces)[0]


def diffuse_response(field: SourceField, rx: Detector, grid: FrequencyGrid) -> TransferFunction:
    """Diffuse response at a detector: one dot product per frequency.

    This is the mobility fast path; everything emitter- and scene-side is
    already cached in ``field``.
    """
    if grid != field.grid:
        raise SceneMismatchError("source field was computed on a different frequency grid")
    _check_same_scene(field.operator.scene, rx, "detector")
    r_gains, r_delays = coupling.patches_to_detector(field.operator.scene.patches, rx)
    values = _kernels.receive_sweep(
        field.values[:, :, None], r_gains, r_delays, grid.samples
    )[:, 0]
    return TransferFunction(grid, diffuse=values)


def brute_force_two_bounce(
    scene: Scene, tx: Emitter, rx: Detector, grid: FrequencyGrid
) -> TransferFunction:
    """Validation oracle: explicit enumeration of all 1- and 2-bounce paths.

    Builds every path gain and delay from the scalar coupling operations
    and sums phasors directly, independent of the matrix kernels it is used
    to check. O(N^2) per frequency; intended for small patch counts.
    """
    patches = scene.patches
    n = len(patches)
    gains = []
    delays = []
    for k in range(n):
        pk = patches.patch(k)
        t = coupling.emitter_to_patch(tx, pk)
        if t.gain == 0.0:
            continue
        r = coupling.patch_to_detector(pk, rx)
        if r.gain > 0.0:
            gains.append(t.gain * pk.reflectivity * r.gain)
            delays.append(t.delay + r.delay)
        for j in range(n):
            if j == k:
                continue
            pj = patches.patch(j)
            hop = coupling.patch_to_patch(pk, pj)
            if hop.gain == 0.0:
                continue
            r2 = coupling.patch_to_detector(pj, rx)
            if r2.gain == 0.0:
                continue
            gains.append(t.gain * pk.reflectivity * hop.gain * pj.reflectivity * r2.gain)
            delays.append(t.delay + hop.delay + r2.delay)
    if not gains:
        return TransferFunction(grid)
    amp = np.asarray(gains)
    tau = np.asarray(delays)
    values = np.array(
        [np.sum(amp * np.exp((-2j * math.pi * f) * tau)) for f in grid.samples]
    )
    return TransferFunction(grid, diffuse=values)
