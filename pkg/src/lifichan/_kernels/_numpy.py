"""Pure-numpy implementations of the hot kernels.

Fallback backend used when the compiled extension is unavailable; results
match the compiled backend to floating-point accuracy. The per-frequency
phasor matrix is synthesized into a reused buffer and never stored for
more than one frequency at a time.
"""

import numpy as np

NAME = "numpy"

_TWO_PI = 2.0 * np.pi


def intrinsic_matrices(centers, normals, areas, block: int = 256):
    """Pairwise patch gain and delay matrices.

    ``gain[i, k]`` is the DC transfer coefficient of the link from patch k
    to patch i (zero on the diagonal and for pairs that cannot see each
    other); ``delay[i, k]`` is the propagation delay. Computed in row
    blocks to bound temporary memory.
    """
    c = 299_792_458.0
    n = centers.shape[0]
    gain = np.empty((n, n))
    delay = np.empty((n, n))
    for start in range(0, n, block):
        stop = min(start + block, n)
        d_vec = centers[start:stop, None, :] - centers[None, :, :]  # k -> i
        d2 = np.einsum("ikj,ikj->ik", d_vec, d_vec)
        np.fill_diagonal(d2[:, start:stop], 1.0)  # keep sqrt well-defined
        d = np.sqrt(d2)
        cos_src = np.einsum("ikj,kj->ik", d_vec, normals) / d
        cos_dst = -np.einsum("ikj,ij->ik", d_vec, normals[start:stop]) / d
        g = cos_src * cos_dst
        g[(cos_src <= 0.0) | (cos_dst <= 0.0)] = 0.0
        g *= areas[start:stop, None] / (np.pi * d2)
        delay[start:stop] = d / c
        gain[start:stop] = g
    np.fill_diagonal(gain, 0.0)
    np.fill_diagonal(delay, 0.0)
    return gain, delay


def source_field_sweep(gain, delay, rho, t_gains, t_delays, freqs, bounces, num_threads=0):
    """Per-frequency diffuse source fields for a batch of emitters.

    Returns a complex array of shape (n_freqs, n_patches, n_emitters)
    holding, for every frequency, the field reaching the receiver side
    after 1..``bounces`` diffuse reflections. ``num_threads`` is accepted
    for interface parity and ignored.
    """
    n = gain.shape[0]
    n_f = freqs.shape[0]
    n_e = t_gains.shape[1]
    out = np.empty((n_f, n, n_e), dtype=np.complex128)
    rho_col = rho[:, None]
    phase = np.empty((n, n))
    phasor = np.empty((n, n), dtype=np.complex128)
    for fi, f in enumerate(freqs):
        u = rho_col * (t_gains * np.exp((-2j * np.pi * f) * t_delays))
        v = u.copy()
        if bounces > 1:
            np.multiply(delay, -_TWO_PI * f, out=phase)
            np.cos(phase, out=phasor.real)
            np.sin(phase, out=phasor.imag)
            phasor *= gain
            w = u
            for _ in range(bounces - 1):
                w = rho_col * (phasor @ w)
                v += w
        out[fi] = v
    return out


def receive_sweep(fields, r_gains, r_delays, freqs, num_threads=0):
    """Contract source fields with the patch-to-detector phasors.

    ``fields`` has shape (n_freqs, n_patches, n_emitters); the result has
    shape (n_freqs, n_emitters). This is the cheap per-pose step of a
    mobility sweep.
    """
    r_phasors = r_gains * np.exp(-2j * np.pi * np.outer(freqs, r_delays))
    return np.einsum("fn,fne->fe", r_phasors, fields)
