"""Network geometry, the measurable edge set, and exact edge parameters.

Nodes are anchors (known positions) followed by targets (unknown). Every
anchor-anchor and anchor-target pair is measurable; target-target pairs are
not. Edges are indexed anchor-anchor block first, each block in ascending
lexicographic order, because downstream kernel blocks and the structure
matrices B_AA / B_AT assume exactly that layout. Pair indices are 0-based.

The edge vector of pair (i, j) is x_i - x_j. Angles follow one fixed set of
conventions: azimuths in a coordinate plane lie in (-pi, pi] from the plane's
first axis, elevations measured from a positive coordinate axis lie in
[0, pi] so that plane-projected lengths d * sin(theta) stay nonnegative, and
the angle between two edges lies in [0, pi]. Signed plane angle differences
subtract azimuths as phi[p] - phi[m].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeMismatch

__all__ = [
    "NetworkGeometry",
    "EdgeSet",
    "StructureMatrices",
    "TrueParameters",
    "edge_set",
    "structure_matrices",
    "edge_matrix",
    "true_parameters",
]

# Plane projections shorter than this are considered degenerate: their
# azimuth is undefined and the edge is flagged for resampling.
DEGENERATE_LENGTH = 1e-9


@dataclass(frozen=True)
class NetworkGeometry:
    """Anchor and target positions in meters, each an (n, 3) array."""

    anchors: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        anchors = np.atleast_2d(np.asarray(self.anchors, dtype=float))
        targets = np.asarray(self.targets, dtype=float).reshape(-1, 3)
        if anchors.ndim != 2 or anchors.shape[1] != 3:
            raise ShapeMismatch("anchors must be an (N_A, 3) array")
        if anchors.shape[0] < 1:
            raise ShapeMismatch("need at least one anchor")
        anchors.setflags(write=False)
        targets.setflags(write=False)
        object.__setattr__(self, "anchors", anchors)
        object.__setattr__(self, "targets", targets)

    @property
    def n_anchors(self) -> int:
        return self.anchors.shape[0]

    @property
    def n_targets(self) -> int:
        return self.targets.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.n_anchors + self.n_targets

    @property
    def stacked(self) -> np.ndarray:
        """All node positions, anchors first, shape (N, 3)."""
        return np.vstack([self.anchors, self.targets])


@dataclass(frozen=True)
class EdgeSet:
    """Measurable node pairs: anchor-anchor block, then anchor-target."""

    n_anchors: int
    n_targets: int
    pairs: tuple[tuple[int, int], ...] = field(init=False)

    def __post_init__(self):
        if self.n_anchors < 1 or self.n_targets < 0:
            raise ShapeMismatch("need n_anchors >= 1 and n_targets >= 0")
        na, nt = self.n_anchors, self.n_targets
        aa = [(i, j) for i in range(na) for j in range(i + 1, na)]
        at = [(i, na + t) for i in range(na) for t in range(nt)]
        object.__setattr__(self, "pairs", tuple(aa + at))

    @property
    def m(self) -> int:
        return len(self.pairs)

    @property
    def n_aa(self) -> int:
        """Number of anchor-anchor edges."""
        return self.n_anchors * (self.n_anchors - 1) // 2

    @property
    def n_at(self) -> int:
        """Number of anchor-target edges."""
        return self.n_anchors * self.n_targets

    def index_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        pairs = np.array(self.pairs, dtype=int).reshape(-1, 2)
        return pairs[:, 0], pairs[:, 1]


def edge_set(n_anchors: int, n_targets: int) -> EdgeSet:
    """Enumerate the measurable pairs for a network of the given sizes."""
    return EdgeSet(n_anchors, n_targets)


@dataclass(frozen=True)
class StructureMatrices:
    """Signed incidence matrix C and the anchor-target selectors.

    Row m of C has +1 at node i and -1 at node j of edge m, so C applied to
    stacked positions yields the edge vectors. B_AA repeats each anchor index
    across its target edges and B_AT cycles the target index, matching the
    anchor-target edge ordering: row i * n_targets + t is edge (i, t).
    """

    c: np.ndarray
    n_anchors: int
    n_targets: int

    def __post_init__(self):
        self.c.setflags(write=False)

    @property
    def c_aa(self) -> np.ndarray:
        n_aa = self.n_anchors * (self.n_anchors - 1) // 2
        return self.c[:n_aa]

    @property
    def c_at(self) -> np.ndarray:
        n_aa = self.n_anchors * (self.n_anchors - 1) // 2
        return self.c[n_aa:]

    @property
    def b_aa(self) -> np.ndarray:
        return np.kron(np.eye(self.n_anchors), np.ones((self.n_targets, 1)))

    @property
    def b_at(self) -> np.ndarray:
        return np.kron(np.ones((self.n_anchors, 1)), np.eye(self.n_targets))


def structure_matrices(edges: EdgeSet) -> StructureMatrices:
    """Build the incidence and selector matrices for an edge set."""
    n = edges.n_anchors + edges.n_targets
    c = np.zeros((edges.m, n))
    rows = np.arange(edges.m)
    i_idx, j_idx = edges.index_arrays()
    c[rows, i_idx] = 1.0
    c[rows, j_idx] = -1.0
    return StructureMatrices(c, edges.n_anchors, edges.n_targets)


def edge_matrix(geometry: NetworkGeometry, structure: StructureMatrices) -> np.ndarray:
    """Edge vectors x_i - x_j stacked as an (M, 3) array."""
    return structure.c @ geometry.stacked


@dataclass(frozen=True)
class TrueParameters:
    """Noise-free distances and angles of every measurable edge.

    Component naming: an edge vector is (a, b, c) along the x, y, z axes.
    Plane-projected lengths use the two in-plane components; azimuths are
    measured from the plane's first axis (x for xy and xz, y for yz);
    elevation theta_z is the angle from the +z axis, and cyclically for x, y.
    `adoa[m, p]` is the angle between edge vectors m and p. `degenerate`
    flags edges whose length or any plane projection is too short for the
    corresponding angles to be defined.
    """

    vectors: np.ndarray
    distances: np.ndarray
    d_xy: np.ndarray
    d_xz: np.ndarray
    d_yz: np.ndarray
    phi_xy: np.ndarray
    phi_xz: np.ndarray
    phi_yz: np.ndarray
    theta_x: np.ndarray
    theta_y: np.ndarray
    theta_z: np.ndarray
    adoa: np.ndarray
    degenerate: np.ndarray

    def __post_init__(self):
        for name in self.__dataclass_fields__:
            getattr(self, name).setflags(write=False)

    @property
    def alpha_xy(self) -> np.ndarray:
        """Signed azimuth differences phi[p] - phi[m] in the xy plane."""
        return self.phi_xy[None, :] - self.phi_xy[:, None]

    @property
    def alpha_xz(self) -> np.ndarray:
        return self.phi_xz[None, :] - self.phi_xz[:, None]

    @property
    def alpha_yz(self) -> np.ndarray:
        return self.phi_yz[None, :] - self.phi_yz[:, None]

    @property
    def any_degenerate(self) -> bool:
        return bool(np.any(self.degenerate))


def true_parameters(
    geometry: NetworkGeometry, edges: EdgeSet | None = None
) -> TrueParameters:
    """Compute exact per-edge distances and angles from node positions."""
    if edges is None:
        edges = edge_set(geometry.n_anchors, geometry.n_targets)
    v = edge_matrix(geometry, structure_matrices(edges))
    a, b, c = v[:, 0], v[:, 1], v[:, 2]

    d = np.linalg.norm(v, axis=1)
    d_xy = np.hypot(a, b)
    d_xz = np.hypot(a, c)
    d_yz = np.hypot(b, c)

    phi_xy = np.arctan2(b, a)
    phi_xz = np.arctan2(c, a)
    phi_yz = np.arctan2(c, b)

    theta_z = np.arctan2(d_xy, c)
    theta_y = np.arctan2(d_xz, b)
    theta_x = np.arctan2(d_yz, a)

    gram = v @ v.T
    dd = np.outer(d, d)
    with np.errstate(divide="ignore", invalid="ignore"):
        cos_a = np.where(dd > 0, gram / np.where(dd > 0, dd, 1.0), 1.0)
    adoa = np.arccos(np.clip(cos_a, -1.0, 1.0))
    np.fill_diagonal(adoa, 0.0)

    degenerate = (
        (d <= DEGENERATE_LENGTH)
        | (d_xy <= DEGENERATE_LENGTH)
        | (d_xz <= DEGENERATE_LENGTH)
        | (d_yz <= DEGENERATE_LENGTH)
    )
    return TrueParameters(
        vectors=v,
        distances=d,
        d_xy=d_xy,
        d_xz=d_xz,
        d_yz=d_yz,
        phi_xy=phi_xy,
        phi_xz=phi_xz,
        phi_yz=phi_yz,
        theta_x=theta_x,
        theta_y=theta_y,
        theta_z=theta_z,
        adoa=adoa,
        degenerate=degenerate,
    )
