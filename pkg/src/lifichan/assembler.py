"""Composition of complete links, MIMO matrices, mobility sweeps, metrics.

The total response of a link is the sample-wise sum of the line-of-sight
part, the first two diffuse reflections, and the higher-order diffuse
tail. A :class:`ChannelWorkspace` holds everything that does not depend on
the receiver pose (intrinsic operator, per-emitter source fields, sphere
tail) so MIMO matrices and mobility traces reuse it across links.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import coupling, diffuse, sphere
from .errors import GeometryError, GridMismatchError, PoseError
from .response import TransferFunction
from .scene import Detector, Emitter, FrequencyGrid, Scene


@dataclass(frozen=True)
class SolverOptions:
    """Knobs of the channel solver; defaults follow the base model."""

    bounces: int = 2  # diffuse reflections resolved patch-by-patch
    include_tail: bool = True
    tail_delay_offset: bool = False
    rho1: Optional[float] = None  # override the initially-lit-face rule
    memory_budget: Optional[int] = None

    def __post_init__(self):
        if self.bounces < 1:
            raise ValueError("bounce count must be >= 1")


class ChannelWorkspace:
    """Scene-level caches shared by every link and receiver pose.

    Building one workspace costs the full intrinsic-operator assembly and
    one source-field sweep per emitter batch; each link afterwards only
    needs the LOS coupling and one receive dot product per frequency.
    """

    def __init__(
        self,
        scene: Scene,
        grid: FrequencyGrid,
        options: Optional[SolverOptions] = None,
        emitters: Optional[Sequence[Emitter]] = None,
    ):
        self.scene = scene
        self.grid = grid
        self.options = options or SolverOptions()
        self.emitters = tuple(emitters) if emitters is not None else scene.emitters
        t0 = time.perf_counter()
        self.operator = diffuse.build_intrinsic(scene, self.options.memory_budget)
        self.fields = diffuse.source_fields(
            self.operator, self.emitters, grid, self.options.bounces
        )
        if self.fields:
            stack = np.stack([f.values for f in self.fields], axis=2)
        else:
            stack = np.zeros((len(grid), len(scene.patches), 0), dtype=np.complex128)
        self._field_stack = np.ascontiguousarray(stack)
        self._tails: dict = {}
        self.build_seconds = time.perf_counter() - t0

    def tail_values(self, emitter_index: int, rx_area: float) -> np.ndarray:
        """Tail component shared by all links of one emitter/receiver area."""
        if not self.options.include_tail:
            return np.zeros(len(self.grid), dtype=np.complex128)
        key = (emitter_index, rx_area)
        if key not in self._tails:
            params = sphere.params_for_scene(
                self.scene,
                self.emitters[emitter_index],
                rx_area,
                rho1=self.options.rho1,
                delay_offset=self.options.tail_delay_offset,
            )
            self._tails[key] = sphere.tail_response(params, self.grid).tail
        return self._tails[key]

    def links_for_detector(self, rx: Detector) -> list[TransferFunction]:
        """Responses from every emitter to one detector (the per-pose step)."""
        from . import _kernels

        diffuse._check_same_scene(self.scene, rx, "detector")
        r_gains, r_delays = coupling.patches_to_detector(self.scene.patches, rx)
        diff = _kernels.receive_sweep(self._field_stack, r_gains, r_delays, self.grid.samples)
        out = []
        for e, tx in enumerate(self.emitters):
            cpl = coupling.emitter_to_detector(tx, rx)
            los = cpl.gain * np.exp((-2j * math.pi * cpl.delay) * self.grid.samples)
            out.append(
                TransferFunction(
                    self.grid,
                    los=los,
                    diffuse=diff[:, e],
                    tail=self.tail_values(e, rx.area),
                )
            )
        return out

    def link(self, emitter_index: int, rx: Detector) -> TransferFunction:
        return self.links_for_detector(rx)[emitter_index]


def link_response(
    scene: Scene,
    tx: Emitter,
    rx: Detector,
    grid: FrequencyGrid,
    options: Optional[SolverOptions] = None,
) -> TransferFunction:
    """Complete response of one link, cold (no cache reuse)."""
    ws = ChannelWorkspace(scene, grid, options, emitters=[tx])
    return ws.link(0, rx)


@dataclass(frozen=True)
class ChannelMatrix:
    """Per-(detector, emitter) transfer functions for one placement."""

    grid: FrequencyGrid
    emitters: tuple
    detectors: tuple
    entries: tuple  # entries[r][t] -> TransferFunction

    @property
    def shape(self) -> tuple:
        return (len(self.detectors), len(self.emitters))

    def entry(self, rx_index: int, tx_index: int) -> TransferFunction:
        return self.entries[rx_index][tx_index]


def mimo_matrix(
    scene: Scene, grid: FrequencyGrid, options: Optional[SolverOptions] = None
) -> ChannelMatrix:
    """All emitter-detector responses of the scene, sharing one workspace."""
    ws = ChannelWorkspace(scene, grid, options)
    entries = tuple(tuple(ws.links_for_detector(rx)) for rx in scene.detectors)
    return ChannelMatrix(grid, ws.emitters, scene.detectors, entries)


@dataclass(frozen=True)
class Pose:
    """Receiver position and facing direction for mobility sweeps."""

    position: np.ndarray
    orientation: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=np.float64))
        object.__setattr__(self, "orientation", np.asarray(self.orientation, dtype=np.float64))


@dataclass(frozen=True)
class MobilityTrace:
    """Channel matrices and scalar metrics along a receiver trajectory."""

    grid: FrequencyGrid
    poses: tuple
    emitters: tuple
    links: tuple  # links[p][t] -> TransferFunction
    distances: np.ndarray  # (n_poses, n_emitters)
    gains_db: np.ndarray  # (n_poses, n_emitters) at query_frequency
    query_frequency: float
    workspace_seconds: float
    pose_seconds: np.ndarray


def mobility_sweep(
    scene: Scene,
    poses: Sequence[Pose],
    grid: FrequencyGrid,
    options: Optional[SolverOptions] = None,
    rx_template_index: int = 0,
    query_frequency: float = 5e6,
) -> MobilityTrace:
    """Evaluate many receiver poses against one cached workspace.

    Only the LOS couplings and the receive dot products are recomputed per
    pose; the output is identical to rebuilding the full channel matrix at
    every pose.
    """
    template = scene.detectors[rx_template_index]
    room = scene.room
    for idx, pose in enumerate(poses):
        if not room.contains(pose.position):
            raise PoseError(idx, f"position {pose.position.tolist()} outside the room")
    ws = ChannelWorkspace(scene, grid, options)
    links = []
    distances = np.empty((len(poses), len(ws.emitters)))
    gains = np.empty_like(distances)
    pose_seconds = np.empty(len(poses))
    for p, pose in enumerate(poses):
        t0 = time.perf_counter()
        rx = Detector(pose.position, pose.orientation, template.area, template.fov, template.name)
        row = ws.links_for_detector(rx)
        links.append(tuple(row))
        for e, tx in enumerate(ws.emitters):
            distances[p, e] = float(np.linalg.norm(tx.position - rx.position))
            gains[p, e] = gain_db(row[e], query_frequency)
        pose_seconds[p] = time.perf_counter() - t0
    return MobilityTrace(
        grid,
        tuple(poses),
        ws.emitters,
        tuple(links),
        distances,
        gains,
        query_frequency,
        ws.build_seconds,
        pose_seconds,
    )


def gain_db(
    tf: TransferFunction, f: float, convention: str = "20log", offset_db: float = 0.0
) -> float:
    """Channel gain in dB at the grid sample nearest to ``f``.

    The default convention is 20*log10 of the transfer-function magnitude;
    ``offset_db`` registers simulated curves against differently calibrated
    references.
    """
    scale = {"20log": 20.0, "10log": 10.0}.get(convention)
    if scale is None:
        raise ValueError(f"unknown dB convention {convention!r}")
    mag = float(np.abs(tf.samples[tf.grid.nearest_index(f)]))
    if mag == 0.0:
        return -math.inf
    return scale * math.log10(mag) + offset_db


def relative_mse_arrays(measured: np.ndarray, simulated: np.ndarray, mode: str = "complex") -> float:
    """Relative mean square error between two responses, in percent."""
    if measured.shape != simulated.shape:
        raise GridMismatchError("responses have different sample counts")
    if mode == "amplitude":
        measured = np.abs(measured)
        simulated = np.abs(simulated)
    elif mode != "complex":
        raise ValueError(f"unknown MSE mode {mode!r}")
    ref = float(np.sum(np.abs(measured) ** 2))
    if ref == 0.0:
        raise GeometryError("measured reference is identically zero; MSE undefined")
    return 100.0 * float(np.sum(np.abs(measured - simulated) ** 2)) / ref


def relative_mse(
    measured: TransferFunction, simulated: TransferFunction, mode: str = "complex"
) -> float:
    """Relative MSE of two transfer functions on identical grids."""
    if measured.grid != simulated.grid:
        raise GridMismatchError("measured and simulated grids differ")
    return relative_mse_arrays(measured.samples, simulated.samples, mode)


@dataclass(frozen=True)
class HeatmapSpec:
    """Sampling plan for a DC power map at a fixed height."""

    x_step: float
    y_step: float
    height: float
    rx_template: Detector


@dataclass(frozen=True)
class HeatMap:
    """Received DC optical power on a horizontal grid of cell centers."""

    x: np.ndarray
    y: np.ndarray
    values: np.ndarray  # (len(y), len(x)) watts
    height: float


def dc_heatmap(scene: Scene, spec: HeatmapSpec) -> HeatMap:
    """Expected DC optical power from all emitters at each grid point."""
    room = scene.room
    if not 0.0 < spec.height < room.height_z:
        raise GeometryError(f"heatmap height {spec.height} outside the room")
    nx = math.ceil(room.length_x / spec.x_step - 1e-12)
    ny = math.ceil(room.width_y / spec.y_step - 1e-12)
    x = (np.arange(nx) + 0.5) * (room.length_x / nx)
    y = (np.arange(ny) + 0.5) * (room.width_y / ny)
    xx, yy = np.meshgrid(x, y)
    points = np.column_stack([xx.ravel(), yy.ravel(), np.full(xx.size, spec.height)])
    template = spec.rx_template
    power = np.zeros(points.shape[0])
    for tx in scene.emitters:
        gains, _ = coupling.emitter_to_points(
            tx, points, template.orientation, template.area, template.fov
        )
        power += tx.power * gains
    return HeatMap(x, y, power.reshape(ny, nx), spec.height)


def impulse_response(tf: TransferFunction, window: str = "rectangular"):
    """Equivalent real impulse response of a one-sided transfer function.

    The spectrum is Hermitian-extended and inverse transformed; the time
    step is 1 / (2 f_max). ``window`` may be ``rectangular`` (default) or
    ``hann`` to taper the band edge before the transform.
    """
    f = tf.grid.samples
    if f[0] != 0.0 or len(f) < 2:
        raise GridMismatchError("impulse response needs a uniform grid starting at DC")
    step = f[1] - f[0]
    if not np.allclose(np.diff(f), step, rtol=1e-9, atol=0.0):
        raise GridMismatchError("impulse response needs a uniform frequency grid")
    spectrum = tf.samples
    if window == "hann":
        spectrum = spectrum * np.hanning(2 * len(f) - 1)[len(f) - 1 :]
    elif window != "rectangular":
        raise ValueError(f"unknown window {window!r}")
    series = np.fft.irfft(spectrum)
    dt = 1.0 / (2.0 * tf.grid.f_max)
    times = np.arange(series.size) * dt
    return times, series
