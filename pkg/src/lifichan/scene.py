"""Room geometry, optical frontends, and the surface-patch discretization.

The room is an empty rectangular box. Each of its six faces is tiled into
rectangular Lambertian patches; the patch resolution ``dx`` fixes the time
resolution of the equivalent impulse response through ``dx = c * dt``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import GeometryError, InvalidResolutionError

SPEED_OF_LIGHT = 299_792_458.0  # m/s

#: Face order used everywhere a per-face quantity is serialized or indexed.
FACE_NAMES = ("floor", "ceiling", "wall_x0", "wall_x1", "wall_y0", "wall_y1")


def _as_point(value) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    if arr.shape != (3,):
        raise GeometryError(f"expected a 3-vector, got shape {arr.shape}")
    return arr


def _as_unit(value, what: str) -> np.ndarray:
    arr = _as_point(value)
    norm = float(np.linalg.norm(arr))
    if abs(norm - 1.0) > 1e-9:
        raise GeometryError(f"{what} must be a unit vector (norm {norm:.12g})")
    return arr


def lambertian_order_from_half_power(half_power_deg: float) -> float:
    """Lambertian order for a given half-power semi-angle in degrees."""
    if not 0.0 < half_power_deg <= 60.0:
        raise GeometryError(
            "half-power semi-angle must be in (0, 60] degrees for order >= 1"
        )
    return -math.log(2.0) / math.log(math.cos(math.radians(half_power_deg)))


@dataclass(frozen=True)
class Room:
    """Rectangular room with one diffuse reflectivity per face."""

    length_x: float
    width_y: float
    height_z: float
    reflectivity: Mapping[str, float]

    def __post_init__(self):
        for name, value in (
            ("length_x", self.length_x),
            ("width_y", self.width_y),
            ("height_z", self.height_z),
        ):
            if not value > 0.0:
                raise GeometryError(f"room {name} must be positive, got {value}")
        if set(self.reflectivity) != set(FACE_NAMES):
            missing = set(FACE_NAMES) - set(self.reflectivity)
            extra = set(self.reflectivity) - set(FACE_NAMES)
            raise GeometryError(
                f"reflectivity must cover exactly the faces {FACE_NAMES}; "
                f"missing {sorted(missing)}, unexpected {sorted(extra)}"
            )
        for name in FACE_NAMES:
            rho = self.reflectivity[name]
            if not 0.0 <= rho < 1.0:
                raise GeometryError(f"reflectivity[{name}]={rho} outside [0, 1)")

    @classmethod
    def uniform(cls, length_x: float, width_y: float, height_z: float, rho: float) -> "Room":
        return cls(length_x, width_y, height_z, {name: rho for name in FACE_NAMES})

    @property
    def dimensions(self) -> np.ndarray:
        return np.array([self.length_x, self.width_y, self.height_z])

    @property
    def surface_area(self) -> float:
        x, y, z = self.length_x, self.width_y, self.height_z
        return 2.0 * (x * y + x * z + y * z)

    @property
    def volume(self) -> float:
        return self.length_x * self.width_y * self.height_z

    @property
    def center(self) -> np.ndarray:
        return self.dimensions / 2.0

    def contains(self, point, strict: bool = True) -> bool:
        p = _as_point(point)
        lo = np.zeros(3)
        hi = self.dimensions
        if strict:
            return bool(np.all(p > lo) and np.all(p < hi))
        return bool(np.all(p >= lo) and np.all(p <= hi))


@dataclass(frozen=True)
class Emitter:
    """LED frontend with a generalized Lambertian radiation pattern."""

    position: np.ndarray
    orientation: np.ndarray
    order: float = 1.0  # Lambertian order m_L
    power: float = 1.0  # optical power in watts; responses are per unit power
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "position", _as_point(self.position))
        object.__setattr__(self, "orientation", _as_unit(self.orientation, "emitter orientation"))
        if not self.order >= 1.0:
            raise GeometryError(f"Lambertian order must be >= 1, got {self.order}")
        if not self.power > 0.0:
            raise GeometryError(f"emitter power must be positive, got {self.power}")

    @classmethod
    def from_half_power_angle(
        cls, position, orientation, half_power_deg: float, power: float = 1.0, name: str = ""
    ) -> "Emitter":
        order = lambertian_order_from_half_power(half_power_deg)
        return cls(position, orientation, order, power, name)


@dataclass(frozen=True)
class Detector:
    """Photodiode frontend with an angular field-of-view cutoff."""

    position: np.ndarray
    orientation: np.ndarray
    area: float  # m^2
    fov: float = math.pi / 2.0  # half-angle in radians
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "position", _as_point(self.position))
        object.__setattr__(self, "orientation", _as_unit(self.orientation, "detector orientation"))
        if not self.area > 0.0:
            raise GeometryError(f"detector area must be positive, got {self.area}")
        if not 0.0 < self.fov <= math.pi / 2.0 + 1e-12:
            raise GeometryError(f"fov must be in (0, pi/2] radians, got {self.fov}")


class Patch(NamedTuple):
    """Single surface element: Lambertian re-emitter and cosine receiver."""

    center: np.ndarray
    normal: np.ndarray
    area: float
    reflectivity: float


@dataclass(frozen=True)
class PatchSet:
    """Surface elements tiling the room envelope.

    Arrays are immutable after construction; every normal points into the
    room interior and per-patch reflectivity comes from the parent face
    unless explicitly overridden.
    """

    centers: np.ndarray  # (N, 3)
    normals: np.ndarray  # (N, 3)
    areas: np.ndarray  # (N,)
    reflectivity: np.ndarray  # (N,)
    face: np.ndarray  # (N,) index into FACE_NAMES
    face_grids: tuple  # ((nu, nv), ...) per face, tiling shape

    def __post_init__(self):
        for arr in (self.centers, self.normals, self.areas, self.reflectivity, self.face):
            arr.flags.writeable = False

    def __len__(self) -> int:
        return self.centers.shape[0]

    @property
    def n_patches(self) -> int:
        return self.centers.shape[0]

    @property
    def total_area(self) -> float:
        return float(self.areas.sum())

    def patch(self, k: int) -> Patch:
        return Patch(
            self.centers[k],
            self.normals[k],
            float(self.areas[k]),
            float(self.reflectivity[k]),
        )

    def face_slice(self, face_index: int) -> slice:
        """Index range of the patches belonging to one face."""
        start = int(np.searchsorted(self.face, face_index, side="left"))
        stop = int(np.searchsorted(self.face, face_index, side="right"))
        return slice(start, stop)

    def with_reflectivity_overrides(self, overrides: Iterable[tuple]) -> "PatchSet":
        """Copy with per-patch reflectivity replaced.

        ``overrides`` yields ``(face_index, iu, iv, value)`` tuples addressed
        in the tiling grid of the face.
        """
        rho = self.reflectivity.copy()
        for face_index, iu, iv, value in overrides:
            if not 0.0 <= value < 1.0:
                raise GeometryError(f"override reflectivity {value} outside [0, 1)")
            nu, nv = self.face_grids[face_index]
            if not (0 <= iu < nu and 0 <= iv < nv):
                raise GeometryError(
                    f"override index ({iu}, {iv}) outside {nu}x{nv} tiling of "
                    f"face {FACE_NAMES[face_index]}"
                )
            offset = self.face_slice(face_index).start
            rho[offset + iu * nv + iv] = value
        return PatchSet(
            self.centers.copy(), self.normals.copy(), self.areas.copy(), rho,
            self.face.copy(), self.face_grids,
        )


# Per-face tiling table: fixed coordinate axis, its value factor (0 -> 0.0,
# 1 -> room dimension), inward normal sign, and the two in-face axes.
_FACE_TABLE = (
    # name        fixed axis, side, u axis, v axis
    ("floor", 2, 0, 0, 1),
    ("ceiling", 2, 1, 0, 1),
    ("wall_x0", 0, 0, 1, 2),
    ("wall_x1", 0, 1, 1, 2),
    ("wall_y0", 1, 0, 0, 2),
    ("wall_y1", 1, 1, 0, 2),
)


def discretize(room: Room, dx: float) -> PatchSet:
    """Tile the six faces of ``room`` into patches with edge length <= ``dx``.

    Each face edge of length ``L`` is split into ``ceil(L / dx)`` equal
    segments, so patches never exceed ``dx`` and the tiling is exact: the
    patch areas sum to the room surface area.
    """
    dims = room.dimensions
    if not dx > 0.0:
        raise InvalidResolutionError(f"dx must be positive, got {dx}")
    if dx > float(dims.min()) * (1.0 + 1e-12):
        raise InvalidResolutionError(
            f"dx={dx} exceeds the smallest face edge {dims.min()} of the room"
        )

    centers, normals, areas, rho, face_ids = [], [], [], [], []
    face_grids = []
    for face_index, (name, fixed, side, u_axis, v_axis) in enumerate(_FACE_TABLE):
        lu, lv = dims[u_axis], dims[v_axis]
        nu = math.ceil(lu / dx - 1e-12)
        nv = math.ceil(lv / dx - 1e-12)
        du, dv = lu / nu, lv / nv
        face_grids.append((nu, nv))

        normal = np.zeros(3)
        normal[fixed] = 1.0 if side == 0 else -1.0
        u_centers = (np.arange(nu) + 0.5) * du
        v_centers = (np.arange(nv) + 0.5) * dv
        uu, vv = np.meshgrid(u_centers, v_centers, indexing="ij")
        pts = np.empty((nu * nv, 3))
        pts[:, fixed] = dims[fixed] * side
        pts[:, u_axis] = uu.ravel()
        pts[:, v_axis] = vv.ravel()

        centers.append(pts)
        normals.append(np.tile(normal, (nu * nv, 1)))
        areas.append(np.full(nu * nv, du * dv))
        rho.append(np.full(nu * nv, room.reflectivity[name]))
        face_ids.append(np.full(nu * nv, face_index, dtype=np.uint8))

    return PatchSet(
        np.ascontiguousarray(np.concatenate(centers)),
        np.ascontiguousarray(np.concatenate(normals)),
        np.concatenate(areas),
        np.concatenate(rho),
        np.concatenate(face_ids),
        tuple(face_grids),
    )


def effective_time_resolution(dx: float) -> float:
    """Impulse-response time resolution equivalent to patch size ``dx``."""
    if not dx > 0.0:
        raise InvalidResolutionError(f"dx must be positive, got {dx}")
    return dx / SPEED_OF_LIGHT


def average_reflectivity(patches: PatchSet) -> float:
    """Area-weighted mean reflectivity of the enclosure."""
    if len(patches) == 0:
        raise GeometryError("cannot average reflectivity of an empty patch set")
    return float(np.dot(patches.reflectivity, patches.areas) / patches.areas.sum())


@dataclass(eq=False)
class FrequencyGrid:
    """Strictly increasing list of evaluation frequencies in hertz."""

    samples: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise GeometryError("frequency grid must be a nonempty 1-D array")
        if arr[0] < 0.0:
            raise GeometryError("frequencies must be nonnegative")
        if not np.all(np.diff(arr) > 0.0):
            raise GeometryError("frequency grid must be strictly increasing")
        arr.flags.writeable = False
        self.samples = arr

    @classmethod
    def from_range(cls, f_min: float, f_max: float, step: float) -> "FrequencyGrid":
        if step <= 0.0 or f_max <= f_min:
            raise GeometryError("need f_max > f_min and step > 0")
        n = int(round((f_max - f_min) / step)) + 1
        return cls(np.linspace(f_min, f_max, n))

    @classmethod
    def default(cls) -> "FrequencyGrid":
        """0 to 250 MHz in 1 MHz steps, DC included."""
        return cls.from_range(0.0, 250e6, 1e6)

    def __len__(self) -> int:
        return self.samples.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, FrequencyGrid):
            return NotImplemented
        return np.array_equal(self.samples, other.samples)

    def nearest_index(self, f: float) -> int:
        return int(np.argmin(np.abs(self.samples - f)))

    @property
    def f_max(self) -> float:
        return float(self.samples[-1])

    @property
    def includes_dc(self) -> bool:
        return self.samples[0] == 0.0


@dataclass(frozen=True)
class Scene:
    """Immutable simulation scene: room, devices, and the patch tiling."""

    room: Room
    patches: PatchSet
    emitters: tuple
    detectors: tuple
    dx: float

    @classmethod
    def build(
        cls,
        room: Room,
        emitters: Sequence[Emitter],
        detectors: Sequence[Detector],
        dx: float,
        patch_overrides: Iterable[tuple] = (),
    ) -> "Scene":
        for device in (*emitters, *detectors):
            if not room.contains(device.position):
                kind = "emitter" if isinstance(device, Emitter) else "detector"
                raise GeometryError(
                    f"{kind} {device.name or ''} at {device.position.tolist()} "
                    f"is not strictly inside the room"
                )
        patches = discretize(room, dx)
        overrides = tuple(patch_overrides)
        if overrides:
            patches = patches.with_reflectivity_overrides(overrides)
        return cls(room, patches, tuple(emitters), tuple(detectors), dx)

    @property
    def time_resolution(self) -> float:
        return effective_time_resolution(self.dx)
