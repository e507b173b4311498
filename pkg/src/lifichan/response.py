"""Channel transfer functions sampled on a shared frequency grid."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatchError
from .scene import FrequencyGrid


def _component(grid: FrequencyGrid, values) -> np.ndarray:
    arr = np.zeros(len(grid), dtype=np.complex128) if values is None else np.asarray(
        values, dtype=np.complex128
    )
    if arr.shape != (len(grid),):
        raise GridMismatchError(
            f"component has {arr.shape[0] if arr.ndim == 1 else arr.shape} samples, "
            f"grid has {len(grid)}"
        )
    return arr


@dataclass(frozen=True)
class TransferFunction:
    """Complex channel response with its component breakdown retained.

    The total response is the sample-wise sum of the line-of-sight part,
    the first two diffuse reflections, and the higher-order diffuse tail;
    keeping the parts separate makes the additivity exact by construction
    and lets tests and tools inspect each mechanism.
    """

    grid: FrequencyGrid
    los: np.ndarray = field(default=None)
    diffuse: np.ndarray = field(default=None)
    tail: np.ndarray = field(default=None)

    def __post_init__(self):
        for name in ("los", "diffuse", "tail"):
            arr = _component(self.grid, getattr(self, name))
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def samples(self) -> np.ndarray:
        return self.los + self.diffuse + self.tail

    def component(self, name: str) -> np.ndarray:
        if name == "total":
            return self.samples
        if name in ("los", "diffuse", "tail"):
            return getattr(self, name)
        raise KeyError(f"unknown component {name!r}")

    def magnitude(self) -> np.ndarray:
        return np.abs(self.samples)

    def __add__(self, other: "TransferFunction") -> "TransferFunction":
        if not isinstance(other, TransferFunction):
            return NotImplemented
        if self.grid != other.grid:
            raise GridMismatchError("cannot add responses on different frequency grids")
        return TransferFunction(
            self.grid,
            self.los + other.los,
            self.diffuse + other.diffuse,
            self.tail + other.tail,
        )
