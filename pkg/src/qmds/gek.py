"""Gram edge kernels built from measured distances and angles.

The real kernel holds d_m d_p cos(alpha_mp): every pairwise inner product of
edge vectors, so it equals V V^T when measurements are exact and has rank 3.
The quaternion kernel additionally encodes the three plane-projected outer
products in its imaginary parts:

    K[m, p] = d_m d_p cos(alpha_mp)
              - i d_m^xy d_p^xy sin(phi_p^xy - phi_m^xy)
              - j d_m^xz d_p^xz sin(phi_p^xz - phi_m^xz)
              - k d_m^yz d_p^yz sin(phi_p^yz - phi_m^yz).

Exact inputs make it the rank-1 outer product nu nu^H of the quaternion edge
embedding nu_m = a_m + b_m i + c_m j (k component fixed at zero), with top
eigenvalue equal to the summed squared distances. Entries carry m^2.

Only the upper triangle is evaluated from measurements; the lower triangle
is mirrored by conjugation, never recomputed, so both kernels are Hermitian
to the bit even under noise.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import AsymmetricMask, DimensionMismatch, ShapeMismatch
from .measurement import MeasurementSet
from .quat import QuaternionMatrix

__all__ = [
    "RealGek",
    "QuatGek",
    "build_real_gek",
    "build_quat_gek",
    "quat_gek_from_measurements",
    "extract_blocks",
    "apply_mask",
    "save_gek",
    "load_gek",
]

_MAGIC = b"GEK1"


@dataclass(frozen=True)
class RealGek:
    """Real symmetric kernel with an optional observation mask."""

    k: np.ndarray
    mask: np.ndarray | None = None

    def __post_init__(self):
        self.k.setflags(write=False)
        if self.mask is not None:
            self.mask.setflags(write=False)

    @property
    def m(self) -> int:
        return self.k.shape[0]


@dataclass(frozen=True)
class QuatGek:
    """Hermitian quaternion kernel with an optional observation mask."""

    k: QuaternionMatrix
    mask: np.ndarray | None = None

    def __post_init__(self):
        if self.mask is not None:
            self.mask.setflags(write=False)

    @property
    def m(self) -> int:
        return self.k.shape[0]


def _check_mask(mask: np.ndarray, m: int) -> np.ndarray:
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != (m, m):
        raise AsymmetricMask(f"mask shape {mask.shape} does not match M={m}")
    if not np.array_equal(mask, mask.T):
        raise AsymmetricMask("observation mask must be symmetric")
    if not np.all(np.diag(mask)):
        raise AsymmetricMask("diagonal entries must be observed")
    return mask


def build_real_gek(ms: MeasurementSet) -> RealGek:
    """Assemble the real kernel from measured distances and pair angles."""
    d = ms.distances
    k = np.outer(d, d) * np.cos(ms.adoa)
    iu = np.triu_indices(ms.m, 1)
    k[iu[1], iu[0]] = k[iu]
    gek = RealGek(k)
    return gek if ms.mask is None else apply_mask(gek, ms.mask)


def build_quat_gek(
    distances: np.ndarray,
    adoa: np.ndarray,
    azimuths: tuple[np.ndarray, np.ndarray, np.ndarray],
    plane_distances: tuple[np.ndarray, np.ndarray, np.ndarray],
    mask: np.ndarray | None = None,
) -> QuatGek:
    """Assemble the quaternion kernel from per-edge measurements.

    `azimuths` and `plane_distances` are (xy, xz, yz) triples. The angle
    source may be measured (Scenario II) or estimated from a first
    positioning pass; the kernel does not care.
    """
    d = np.asarray(distances, dtype=float)
    m = d.shape[0]
    if adoa.shape != (m, m):
        raise ShapeMismatch("pair-angle matrix does not match the edge count")

    real = np.outer(d, d) * np.cos(adoa)
    imag = []
    for phi, dp in zip(azimuths, plane_distances):
        delta = phi[None, :] - phi[:, None]  # phi_p - phi_m
        imag.append(-np.outer(dp, dp) * np.sin(delta))

    ka = real + 1j * imag[0]
    kb = imag[1] + 1j * imag[2]
    iu = np.triu_indices(m, 1)
    ka[iu[1], iu[0]] = np.conj(ka[iu])
    kb[iu[1], iu[0]] = -kb[iu]
    gek = QuatGek(QuaternionMatrix(ka, kb))
    return gek if mask is None else apply_mask(gek, mask)


def quat_gek_from_measurements(ms: MeasurementSet) -> QuatGek:
    """Quaternion kernel straight from a Scenario II measurement set."""
    if not ms.has_angles:
        raise ShapeMismatch(
            "measurement set carries no angles; build the kernel from "
            "estimated azimuths and elevations instead"
        )
    return build_quat_gek(
        ms.distances,
        ms.adoa,
        (ms.phi_xy, ms.phi_xz, ms.phi_yz),
        ms.plane_distances(),
        mask=ms.mask,
    )


def extract_blocks(
    gek: QuatGek, n_anchors: int, n_targets: int
) -> tuple[QuaternionMatrix, QuaternionMatrix, QuaternionMatrix]:
    """Split the kernel into anchor-anchor / cross / anchor-target blocks.

    Requires the edge ordering this package always uses: the anchor-anchor
    block first. Returns (K1, K2, K3) where K1 is n_aa x n_aa, K2 is
    n_aa x n_at, and K3 is n_at x n_at.
    """
    n_aa = n_anchors * (n_anchors - 1) // 2
    n_at = n_anchors * n_targets
    if gek.m != n_aa + n_at:
        raise DimensionMismatch(
            f"kernel size {gek.m} does not match {n_aa} + {n_at} edges"
        )
    k = gek.k
    k1 = QuaternionMatrix(k.a[:n_aa, :n_aa], k.b[:n_aa, :n_aa])
    k2 = QuaternionMatrix(k.a[:n_aa, n_aa:], k.b[:n_aa, n_aa:])
    k3 = QuaternionMatrix(k.a[n_aa:, n_aa:], k.b[n_aa:, n_aa:])
    return k1, k2, k3


def apply_mask(gek: "RealGek | QuatGek", mask: np.ndarray) -> "RealGek | QuatGek":
    """Zero unobserved entries and retain the mask on the kernel."""
    mask = _check_mask(mask, gek.m)
    if isinstance(gek, RealGek):
        return RealGek(np.where(mask, gek.k, 0.0), mask)
    a = np.where(mask, gek.k.a, 0.0)
    b = np.where(mask, gek.k.b, 0.0)
    return QuatGek(QuaternionMatrix(a, b), mask)


def save_gek(path: "str | Path", gek: "RealGek | QuatGek") -> None:
    """Write a kernel to a flat little-endian binary file.

    Layout: 4-byte magic, uint32 M, uint8 domain tag (0 real, 1 quaternion),
    uint8 mask flag, then the row-major float64 payload (1 component per
    entry for real, 4 in w,x,y,z order for quaternion), then the packed
    row-major mask bits when flagged.
    """
    quat = isinstance(gek, QuatGek)
    header = _MAGIC + struct.pack("<IBB", gek.m, int(quat), int(gek.mask is not None))
    if quat:
        k = gek.k
        payload = np.stack([k.w, k.x, k.y, k.z], axis=-1)
    else:
        payload = gek.k
    blob = header + np.ascontiguousarray(payload, dtype="<f8").tobytes()
    if gek.mask is not None:
        blob += np.packbits(gek.mask.reshape(-1)).tobytes()
    Path(path).write_bytes(blob)


def load_gek(path: "str | Path") -> "RealGek | QuatGek":
    """Read a kernel written by `save_gek`."""
    blob = Path(path).read_bytes()
    if blob[:4] != _MAGIC:
        raise ShapeMismatch("not a kernel file: bad magic")
    m, quat, has_mask = struct.unpack("<IBB", blob[4:10])
    comps = 4 if quat else 1
    count = m * m * comps
    end = 10 + 8 * count
    payload = np.frombuffer(blob[10:end], dtype="<f8", count=count)
    mask = None
    if has_mask:
        bits = np.unpackbits(np.frombuffer(blob[end:], dtype=np.uint8),
                             count=m * m)
        mask = bits.astype(bool).reshape(m, m)
    if quat:
        w, x, y, z = np.moveaxis(payload.reshape(m, m, 4), -1, 0)
        return QuatGek(QuaternionMatrix.from_components(w, x, y, z), mask)
    return RealGek(payload.reshape(m, m).copy(), mask)
