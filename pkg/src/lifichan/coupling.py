"""Elementary Lambertian line-of-sight coupling between source/sink pairs.

Every ordered pair (emitter-detector, emitter-patch, patch-patch,
patch-detector) reduces to one DC gain plus one propagation delay; the
complex response at any frequency is the gain times a pure phase factor,
so line-of-sight responses are flat in magnitude.
"""

from __future__ import annotations

import math
from typing import NamedTuple, Optional

import numpy as np

from .errors import GeometryError
from .scene import SPEED_OF_LIGHT, Detector, Emitter, Patch, PatchSet

_MIN_DISTANCE = 1e-12


class Coupling(NamedTuple):
    """DC transfer coefficient and propagation delay of one ordered link."""

    gain: float
    delay: float


def _lambertian(
    src_pos: np.ndarray,
    src_dir: np.ndarray,
    order: float,
    dst_pos: np.ndarray,
    dst_dir: np.ndarray,
    dst_area: float,
    fov: Optional[float],
) -> Coupling:
    d_vec = dst_pos - src_pos
    d2 = float(np.dot(d_vec, d_vec))
    d = math.sqrt(d2)
    if d < _MIN_DISTANCE:
        raise GeometryError("source and sink positions coincide")
    cos_src = float(np.dot(d_vec, src_dir)) / d
    cos_dst = -float(np.dot(d_vec, dst_dir)) / d
    delay = d / SPEED_OF_LIGHT
    if cos_src <= 0.0 or cos_dst <= 0.0:
        return Coupling(0.0, delay)
    if fov is not None and cos_dst < math.cos(fov):
        return Coupling(0.0, delay)
    gain = (order + 1.0) / (2.0 * math.pi) * cos_src**order * cos_dst * dst_area / d2
    return Coupling(gain, delay)


def emitter_to_detector(tx: Emitter, rx: Detector) -> Coupling:
    """Direct LED-to-photodiode link, with the detector FOV cutoff applied."""
    return _lambertian(
        tx.position, tx.orientation, tx.order, rx.position, rx.orientation, rx.area, rx.fov
    )


def emitter_to_patch(tx: Emitter, patch: Patch) -> Coupling:
    """LED to one surface element; patches accept over the full hemisphere."""
    return _lambertian(
        tx.position, tx.orientation, tx.order, patch.center, patch.normal, patch.area, None
    )


def patch_to_patch(src: Patch, dst: Patch) -> Coupling:
    """Surface element to surface element (ideal Lambertian re-emission)."""
    return _lambertian(src.center, src.normal, 1.0, dst.center, dst.normal, dst.area, None)


def patch_to_detector(patch: Patch, rx: Detector) -> Coupling:
    """Surface element to photodiode, with the FOV cutoff applied."""
    return _lambertian(patch.center, patch.normal, 1.0, rx.position, rx.orientation, rx.area, rx.fov)


def at_frequency(coupling: Coupling, f: float) -> complex:
    """Complex response of a link at frequency ``f``; modulus equals the gain."""
    return coupling.gain * np.exp(-2j * math.pi * f * coupling.delay)


def phasor(gains: np.ndarray, delays: np.ndarray, f: float) -> np.ndarray:
    """Vectorized ``at_frequency`` over arrays of gains and delays."""
    return gains * np.exp((-2j * math.pi * f) * delays)


# Vectorized couplings over a whole patch set. These feed the diffuse-field
# kernels and must match the scalar operations exactly.


def _directional_factors(positions, normals, point):
    """Distances and direction cosines between ``point`` and many surfaces."""
    d_vec = positions - point  # from point towards each surface
    d2 = np.einsum("ij,ij->i", d_vec, d_vec)
    d = np.sqrt(d2)
    if d.min() < _MIN_DISTANCE:
        raise GeometryError("a patch center coincides with the device position")
    cos_surf = -np.einsum("ij,ij->i", d_vec, normals) / d  # incidence at the surface
    return d_vec, d, d2, cos_surf


def emitter_to_patches(tx: Emitter, patches: PatchSet):
    """Gains and delays from an emitter to every patch: the t(f) vector."""
    d_vec, d, d2, cos_patch = _directional_factors(patches.centers, patches.normals, tx.position)
    cos_tx = d_vec @ tx.orientation / d
    gains = np.zeros(len(patches))
    visible = (cos_tx > 0.0) & (cos_patch > 0.0)
    scale = (tx.order + 1.0) / (2.0 * math.pi)
    gains[visible] = (
        scale
        * cos_tx[visible] ** tx.order
        * cos_patch[visible]
        * patches.areas[visible]
        / d2[visible]
    )
    return gains, d / SPEED_OF_LIGHT


def patches_to_detector(patches: PatchSet, rx: Detector):
    """Gains and delays from every patch to a detector: the r(f) vector."""
    d_vec = rx.position - patches.centers  # from each patch towards the detector
    d2 = np.einsum("ij,ij->i", d_vec, d_vec)
    d = np.sqrt(d2)
    if d.min() < _MIN_DISTANCE:
        raise GeometryError("a patch center coincides with the detector position")
    cos_patch = np.einsum("ij,ij->i", d_vec, patches.normals) / d
    cos_rx = -(d_vec @ rx.orientation) / d
    gains = np.zeros(len(patches))
    visible = (cos_patch > 0.0) & (cos_rx > 0.0) & (cos_rx >= math.cos(rx.fov))
    gains[visible] = cos_patch[visible] * cos_rx[visible] * rx.area / (math.pi * d2[visible])
    return gains, d / SPEED_OF_LIGHT


def emitter_to_points(
    tx: Emitter, points: np.ndarray, orientation: np.ndarray, area: float, fov: float
):
    """LOS gains from one emitter to detectors of a common template placed
    at many positions; used by coverage maps."""
    d_vec = points - tx.position
    d2 = np.einsum("ij,ij->i", d_vec, d_vec)
    d = np.sqrt(d2)
    if d.min() < _MIN_DISTANCE:
        raise GeometryError("a map point coincides with the emitter position")
    cos_tx = d_vec @ tx.orientation / d
    cos_rx = -(d_vec @ orientation) / d
    gains = np.zeros(points.shape[0])
    visible = (cos_tx > 0.0) & (cos_rx > 0.0) & (cos_rx >= math.cos(fov))
    scale = (tx.order + 1.0) / (2.0 * math.pi)
    gains[visible] = scale * cos_tx[visible] ** tx.order * cos_rx[visible] * area / d2[visible]
    return gains, d / SPEED_OF_LIGHT
