"""Scenario files: declarative YAML description of a scene plus simulation
parameters.

The scenario layer stores raw user-facing values (degrees, unnormalized
orientations, range-style frequency specs) so that parse -> serialize ->
parse is the identity; runtime objects are built from it on demand.
Unknown keys are rejected with their location in the document.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from importlib import resources
from typing import Optional

import numpy as np
import yaml

from .assembler import SolverOptions
from .errors import ScenarioError
from .scene import (
    FACE_NAMES,
    Detector,
    Emitter,
    FrequencyGrid,
    Room,
    Scene,
)


class _StrictMap:
    """Mapping view that tracks consumed keys and reports leftovers."""

    def __init__(self, data, location: str):
        if not isinstance(data, dict):
            raise ScenarioError(f"expected a mapping, got {type(data).__name__}", location)
        self._data = dict(data)
        self.location = location

    def take(self, key, required=False, default=None):
        if key in self._data:
            return self._data.pop(key)
        if required:
            raise ScenarioError(f"missing required key '{key}'", self.location)
        return default

    def finish(self):
        if self._data:
            key = sorted(self._data)[0]
            raise ScenarioError(f"unknown key '{key}'", self.location)


def _number(value, location: str) -> float:
    # bare scientific notation like 250.0e6 is not a YAML 1.1 float and
    # arrives as a string; accept it anyway
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            pass
    raise ScenarioError(f"expected a number, got {value!r}", location)


def _vector(value, location: str):
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise ScenarioError(f"expected a 3-element list, got {value!r}", location)
    return tuple(_number(v, location) for v in value)


@dataclass(frozen=True)
class EmitterSpec:
    position: tuple
    orientation: tuple
    order: Optional[float] = None
    half_power_deg: Optional[float] = None
    power: float = 1.0
    name: str = ""


@dataclass(frozen=True)
class DetectorSpec:
    position: tuple
    orientation: tuple
    area_m2: float
    fov_deg: float
    name: str = ""


@dataclass(frozen=True)
class FrequencySpec:
    """Either an f_min/f_max/step range or an explicit sample list."""

    f_min: Optional[float] = None
    f_max: Optional[float] = None
    step: Optional[float] = None
    samples: Optional[tuple] = None

    def to_grid(self, f_max: Optional[float] = None, step: Optional[float] = None) -> FrequencyGrid:
        if self.samples is not None and f_max is None and step is None:
            return FrequencyGrid(np.asarray(self.samples))
        if self.samples is not None:
            base = np.asarray(self.samples)
            return FrequencyGrid.from_range(
                float(base[0]),
                f_max if f_max is not None else float(base[-1]),
                step if step is not None else float(base[1] - base[0]),
            )
        return FrequencyGrid.from_range(
            self.f_min,
            f_max if f_max is not None else self.f_max,
            step if step is not None else self.step,
        )


@dataclass(frozen=True)
class SphereSpec:
    enabled: bool = True
    rho1: Optional[float] = None  # None -> reflectivity of the initially lit face
    delay_offset: bool = False


@dataclass(frozen=True)
class SimulationSpec:
    dx: float
    frequency: FrequencySpec
    bounces: int = 2
    query_frequency: float = 5e6
    sphere: SphereSpec = dc_field(default_factory=SphereSpec)


@dataclass(frozen=True)
class Scenario:
    """Parsed scenario: room, device specs, and simulation parameters."""

    room: Room
    emitters: tuple
    detectors: tuple
    simulation: SimulationSpec
    patch_overrides: tuple = ()
    name: str = ""

    def build_scene(self, dx: Optional[float] = None) -> Scene:
        emitters = [_build_emitter(spec) for spec in self.emitters]
        detectors = [_build_detector(spec) for spec in self.detectors]
        overrides = tuple(
            (FACE_NAMES.index(face), iu, iv, value)
            for face, iu, iv, value in self.patch_overrides
        )
        return Scene.build(
            self.room, emitters, detectors, dx if dx is not None else self.simulation.dx,
            patch_overrides=overrides,
        )

    def grid(self, f_max: Optional[float] = None, step: Optional[float] = None) -> FrequencyGrid:
        return self.simulation.frequency.to_grid(f_max, step)

    def options(self, bounces: Optional[int] = None, include_tail: Optional[bool] = None) -> SolverOptions:
        sph = self.simulation.sphere
        return SolverOptions(
            bounces=bounces if bounces is not None else self.simulation.bounces,
            include_tail=include_tail if include_tail is not None else sph.enabled,
            tail_delay_offset=sph.delay_offset,
            rho1=sph.rho1,
        )


def _normalized(vec, location: str) -> np.ndarray:
    arr = np.asarray(vec, dtype=np.float64)
    norm = float(np.linalg.norm(arr))
    if norm < 1e-12:
        raise ScenarioError("orientation vector must be nonzero", location)
    return arr / norm


def _build_emitter(spec: EmitterSpec) -> Emitter:
    if spec.order is not None:
        return Emitter(spec.position, _normalized(spec.orientation, spec.name), spec.order, spec.power, spec.name)
    return Emitter.from_half_power_angle(
        spec.position, _normalized(spec.orientation, spec.name), spec.half_power_deg, spec.power, spec.name
    )


def _build_detector(spec: DetectorSpec) -> Detector:
    return Detector(
        spec.position,
        _normalized(spec.orientation, spec.name),
        spec.area_m2,
        math.radians(spec.fov_deg),
        spec.name,
    )


def _parse_room(data, location: str) -> Room:
    m = _StrictMap(data, location)
    size = _vector(m.take("size", required=True), f"{location}.size")
    refl = m.take("reflectivity", required=True)
    m.finish()
    if isinstance(refl, (int, float)) and not isinstance(refl, bool):
        mapping = {name: float(refl) for name in FACE_NAMES}
    else:
        rm = _StrictMap(refl, f"{location}.reflectivity")
        mapping = {
            name: _number(rm.take(name, required=True), f"{location}.reflectivity.{name}")
            for name in FACE_NAMES
        }
        rm.finish()
    return Room(size[0], size[1], size[2], mapping)


def _parse_emitter(data, index: int) -> EmitterSpec:
    location = f"emitters[{index}]"
    m = _StrictMap(data, location)
    position = _vector(m.take("position", required=True), f"{location}.position")
    orientation = _vector(m.take("orientation", required=True), f"{location}.orientation")
    order = m.take("lambertian_order")
    half_power = m.take("half_power_deg")
    power = _number(m.take("power_w", default=1.0), f"{location}.power_w")
    name = m.take("name", default=f"tx{index + 1}")
    m.finish()
    if (order is None) == (half_power is None):
        raise ScenarioError(
            "specify exactly one of 'lambertian_order' and 'half_power_deg'", location
        )
    return EmitterSpec(
        position,
        orientation,
        None if order is None else _number(order, f"{location}.lambertian_order"),
        None if half_power is None else _number(half_power, f"{location}.half_power_deg"),
        power,
        str(name),
    )


def _parse_detector(data, index: int) -> DetectorSpec:
    location = f"detectors[{index}]"
    m = _StrictMap(data, location)
    position = _vector(m.take("position", required=True), f"{location}.position")
    orientation = _vector(m.take("orientation", required=True), f"{location}.orientation")
    area = _number(m.take("area_m2", required=True), f"{location}.area_m2")
    fov = _number(m.take("fov_deg", default=90.0), f"{location}.fov_deg")
    name = m.take("name", default=f"rx{index + 1}")
    m.finish()
    return DetectorSpec(position, orientation, area, fov, str(name))


def _parse_frequency(data, location: str) -> FrequencySpec:
    m = _StrictMap(data, location)
    samples = m.take("samples")
    if samples is not None:
        m.finish()
        if not isinstance(samples, list) or len(samples) == 0:
            raise ScenarioError("'samples' must be a nonempty list", location)
        return FrequencySpec(samples=tuple(_number(s, location) for s in samples))
    f_min = _number(m.take("min", default=0.0), f"{location}.min")
    f_max = _number(m.take("max", required=True), f"{location}.max")
    step = _number(m.take("step", required=True), f"{location}.step")
    m.finish()
    return FrequencySpec(f_min=f_min, f_max=f_max, step=step)


def _parse_sphere(data, location: str) -> SphereSpec:
    m = _StrictMap(data, location)
    enabled = m.take("enabled", default=True)
    rho1 = m.take("rho1")
    delay_offset = m.take("delay_offset", default=False)
    m.finish()
    if not isinstance(enabled, bool):
        raise ScenarioError("'enabled' must be a boolean", f"{location}.enabled")
    if not isinstance(delay_offset, bool):
        raise ScenarioError("'delay_offset' must be a boolean", f"{location}.delay_offset")
    return SphereSpec(
        enabled,
        None if rho1 is None else _number(rho1, f"{location}.rho1"),
        delay_offset,
    )


def _parse_simulation(data) -> SimulationSpec:
    location = "simulation"
    m = _StrictMap(data, location)
    dx = _number(m.take("dx_m", required=True), f"{location}.dx_m")
    frequency = _parse_frequency(m.take("frequency_hz", required=True), f"{location}.frequency_hz")
    bounces = m.take("bounces", default=2)
    query = _number(m.take("query_frequency_hz", default=5e6), f"{location}.query_frequency_hz")
    sphere_data = m.take("sphere")
    m.finish()
    if not isinstance(bounces, int) or isinstance(bounces, bool) or bounces < 1:
        raise ScenarioError("'bounces' must be an integer >= 1", f"{location}.bounces")
    sphere = SphereSpec() if sphere_data is None else _parse_sphere(sphere_data, f"{location}.sphere")
    return SimulationSpec(dx, frequency, bounces, query, sphere)


def _parse_override(data, index: int):
    location = f"patch_overrides[{index}]"
    m = _StrictMap(data, location)
    face = m.take("face", required=True)
    iu = m.take("iu", required=True)
    iv = m.take("iv", required=True)
    value = _number(m.take("reflectivity", required=True), f"{location}.reflectivity")
    m.finish()
    if face not in FACE_NAMES:
        raise ScenarioError(f"unknown face {face!r}", f"{location}.face")
    if not isinstance(iu, int) or not isinstance(iv, int) or isinstance(iu, bool) or isinstance(iv, bool):
        raise ScenarioError("'iu' and 'iv' must be integers", location)
    return (face, iu, iv, value)


def loads_scenario(text: str) -> Scenario:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"not valid YAML: {exc}") from exc
    m = _StrictMap(data, "scenario")
    name = m.take("name", default="")
    room = _parse_room(m.take("room", required=True), "room")
    emitters_data = m.take("emitters", default=[])
    detectors_data = m.take("detectors", default=[])
    simulation = _parse_simulation(m.take("simulation", required=True))
    overrides_data = m.take("patch_overrides", default=[])
    m.finish()
    for field_name, value in (("emitters", emitters_data), ("detectors", detectors_data),
                              ("patch_overrides", overrides_data)):
        if not isinstance(value, list):
            raise ScenarioError(f"'{field_name}' must be a list", field_name)
    emitters = tuple(_parse_emitter(e, i) for i, e in enumerate(emitters_data))
    detectors = tuple(_parse_detector(d, i) for i, d in enumerate(detectors_data))
    overrides = tuple(_parse_override(o, i) for i, o in enumerate(overrides_data))
    return Scenario(room, emitters, detectors, simulation, overrides, str(name))


def load_scenario(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as handle:
        return loads_scenario(handle.read())


def bundled_scenario_path(name: str):
    """Path of a bundled scenario file (``conference_room_4x2`` etc.)."""
    return resources.files("lifichan").joinpath("data", f"{name}.yaml")


def _emitter_to_dict(spec: EmitterSpec) -> dict:
    data = {
        "name": spec.name,
        "position": list(spec.position),
        "orientation": list(spec.orientation),
    }
    if spec.order is not None:
        data["lambertian_order"] = spec.order
    else:
        data["half_power_deg"] = spec.half_power_deg
    data["power_w"] = spec.power
    return data


def _detector_to_dict(spec: DetectorSpec) -> dict:
    return {
        "name": spec.name,
        "position": list(spec.position),
        "orientation": list(spec.orientation),
        "area_m2": spec.area_m2,
        "fov_deg": spec.fov_deg,
    }


def dumps_scenario(scenario: Scenario) -> str:
    freq = scenario.simulation.frequency
    if freq.samples is not None:
        freq_data = {"samples": list(freq.samples)}
    else:
        freq_data = {"min": freq.f_min, "max": freq.f_max, "step": freq.step}
    sphere = scenario.simulation.sphere
    sphere_data = {"enabled": sphere.enabled}
    if sphere.rho1 is not None:
        sphere_data["rho1"] = sphere.rho1
    sphere_data["delay_offset"] = sphere.delay_offset
    data = {
        "name": scenario.name,
        "room": {
            "size": [scenario.room.length_x, scenario.room.width_y, scenario.room.height_z],
            "reflectivity": {name: scenario.room.reflectivity[name] for name in FACE_NAMES},
        },
        "emitters": [_emitter_to_dict(e) for e in scenario.emitters],
        "detectors": [_detector_to_dict(d) for d in scenario.detectors],
        "simulation": {
            "dx_m": scenario.simulation.dx,
            "frequency_hz": freq_data,
            "bounces": scenario.simulation.bounces,
            "query_frequency_hz": scenario.simulation.query_frequency,
            "sphere": sphere_data,
        },
    }
    if scenario.patch_overrides:
        data["patch_overrides"] = [
            {"face": face, "iu": iu, "iv": iv, "reflectivity": value}
            for face, iu, iv, value in scenario.patch_overrides
        ]
    return yaml.safe_dump(data, sort_keys=False)


def save_scenario(scenario: Scenario, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(dumps_scenario(scenario))
