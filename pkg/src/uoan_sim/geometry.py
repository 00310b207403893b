"""3D geometry: random deployments, multifaceted transceivers, link pointing.

Frame is right-handed with z measuring depth: the sea surface is z = 0 and
positions inside the water column have z < 0. Vectors are plain numpy arrays
of shape (3,).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


def unit(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v)
    if n < 1e-12:
        raise DomainError("cannot normalize a zero vector")
    return v / n


def angle_between(a: np.ndarray, b: np.ndarray) -> float:
    """Angle in radians between two vectors, clamped against roundoff."""
    c = float(np.dot(unit(a), unit(b)))
    return math.acos(max(-1.0, min(1.0, c)))


@dataclass(frozen=True)
class Box:
    """Axis-aligned deployment volume, corners in meters."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if lo.shape != (3,) or hi.shape != (3,):
            raise ConfigurationError("volume corners must be 3-vectors")
        if not np.all(np.isfinite(lo)) or not np.all(np.isfinite(hi)):
            raise ConfigurationError("volume corners must be finite")
        if not np.all(hi > lo):
            raise ConfigurationError(
                f"volume must have positive extent in every axis (lo={lo.tolist()}, hi={hi.tolist()})"
            )

    @classmethod
    def cube(cls, edge: float) -> "Box":
        """Cube of the given edge, top face on the surface, centered in x/y."""
        if edge <= 0:
            raise ConfigurationError(f"volume edge must be positive, got {edge}")
        h = edge / 2.0
        return cls(np.array([-h, -h, -edge]), np.array([h, h, 0.0]))

    def top_center(self) -> np.ndarray:
        c = (self.lo + self.hi) / 2.0
        return np.array([c[0], c[1], self.hi[2]])

    def center(self) -> np.ndarray:
        return (self.lo + self.hi) / 2.0

    def contains(self, p: np.ndarray, atol: float = 1e-9) -> bool:
        return bool(np.all(p >= self.lo - atol) and np.all(p <= self.hi + atol))


@dataclass(frozen=True)
class Deployment:
    """Ground-truth positions for one Monte Carlo trial."""

    node_positions: np.ndarray  # (n, 3)
    anchor_positions: np.ndarray  # (a, 3)
    sink_position: np.ndarray  # (3,)
    volume: Box

    def __post_init__(self):
        if len(self.node_positions) < 1:
            raise ConfigurationError("deployment needs at least one node")


@dataclass(frozen=True)
class FaceSet:
    """Per-node transceiver faces: boresight directions plus beam angles.

    Transmit divergence and receive field-of-view are half-angles in
    radians; a face both emits into and accepts from a cone of that
    half-angle around its boresight.
    """

    n_faces: int
    boresights: np.ndarray  # (n_faces, 3), unit rows
    divergence_half_angle: float
    fov_half_angle: float

    def __post_init__(self):
        if self.boresights.shape != (self.n_faces, 3):
            raise DomainError("boresights must be one unit vector per face")
        if not (0.0 < self.divergence_half_angle <= math.pi / 2 + 1e-12):
            raise DomainError(
                f"divergence half-angle must lie in (0, pi/2], got {self.divergence_half_angle}"
            )
        if not (0.0 < self.fov_half_angle <= math.pi / 2 + 1e-12):
            raise DomainError(f"FoV half-angle must lie in (0, pi/2], got {self.fov_half_angle}")


@dataclass(frozen=True)
class LinkGeometry:
    """Pointing/incidence summary for one directed transmitter-receiver pair."""

    distance: float
    tx_offaxis: float
    rx_incidence: float
    rx_faces_in_fov: list = field(default_factory=list)  # [(face index, incidence rad)]
    in_beam: bool = False


def equal_solid_angle(n_faces: int) -> float:
    """Half-angle such that n_faces cones of that half-angle tile 4 pi sr."""
    if n_faces < 2:
        raise DomainError("equal-solid-angle rule needs n_faces >= 2")
    return math.acos(1.0 - 2.0 / n_faces)


def _candidate_grid(n: int = 4096) -> np.ndarray:
    """Fine Fibonacci-lattice grid used as the candidate set for boresights."""
    k = np.arange(n)
    z = 1.0 - (2.0 * k + 1.0) / n
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = k * GOLDEN_ANGLE
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


_MAX_CACHED_FACES = 256
_boresight_cache: np.ndarray | None = None


def _boresight_sequence() -> np.ndarray:
    """Deterministic greedy farthest-point sequence on the sphere.

    Starts at the poles, then repeatedly picks the grid direction farthest
    from everything chosen so far (ties by grid index). Every prefix is a
    well-spread arrangement, and prefixes are nested: the face set for N
    is contained in the set for M > N, so adding faces can only improve
    the best pointing toward any fixed direction.
    """
    global _boresight_cache
    if _boresight_cache is None:
        grid = _candidate_grid()
        chosen = np.empty((_MAX_CACHED_FACES, 3))
        chosen[0] = (0.0, 0.0, 1.0)
        chosen[1] = (0.0, 0.0, -1.0)
        min_dot = np.maximum(grid @ chosen[0], grid @ chosen[1])
        for k in range(2, _MAX_CACHED_FACES):
            idx = int(np.argmin(min_dot))
            chosen[k] = grid[idx]
            min_dot = np.maximum(min_dot, grid @ chosen[k])
        _boresight_cache = chosen
    return _boresight_cache


def boresight_directions(n_faces: int) -> np.ndarray:
    """First n_faces directions of the nested greedy spherical sequence."""
    if n_faces < 1:
        raise DomainError("n_faces must be >= 1")
    if n_faces > _MAX_CACHED_FACES:
        raise DomainError(f"n_faces is capped at {_MAX_CACHED_FACES}")
    return _boresight_sequence()[:n_faces].copy()


def face_set(n_faces: int, override_angle: float | None = None) -> FaceSet:
    """Build the transceiver face arrangement for a node with n_faces faces.

    Without an override both half-angles follow the equal-solid-angle rule
    arccos(1 - 2/n_faces), so the face cones jointly account for the full
    sphere. The override decouples the angle from the face count for
    divergence sweeps.
    """
    if n_faces < 1:
        raise DomainError("n_faces must be a positive integer")
    if override_angle is None:
        if n_faces == 1:
            raise DomainError("a single face needs an explicit override_angle <= pi/2")
        angle = equal_solid_angle(n_faces)
    else:
        angle = float(override_angle)
    return FaceSet(
        n_faces=n_faces,
        boresights=boresight_directions(n_faces),
        divergence_half_angle=angle,
        fov_half_angle=angle,
    )


def sample_deployment(
    node_count: int,
    anchor_count: int,
    volume: Box,
    rng: np.random.Generator,
    sink_position: np.ndarray | None = None,
) -> Deployment:
    """Draw node and anchor positions i.i.d. uniform over the volume.

    The sink defaults to the center of the box's top face (the surface
    station at the horizontal origin).
    """
    if node_count < 1:
        raise ConfigurationError(f"node_count must be >= 1, got {node_count}")
    if anchor_count < 0:
        raise ConfigurationError(f"anchor_count must be >= 0, got {anchor_count}")
    span = volume.hi - volume.lo
    nodes = volume.lo + rng.random((node_count, 3)) * span
    anchors = volume.lo + rng.random((anchor_count, 3)) * span
    sink = volume.top_center() if sink_position is None else np.asarray(sink_position, float)
    return Deployment(
        node_positions=nodes, anchor_positions=anchors, sink_position=sink, volume=volume
    )


def link_geometry(
    tx_pos: np.ndarray, tx_faces: FaceSet, rx_pos: np.ndarray, rx_faces: FaceSet
) -> LinkGeometry:
    """Pointing summary for the directed link tx -> rx.

    The transmit face is the one whose boresight is closest to the line of
    sight; every receive face whose FoV contains the transmitter
    contributes to reception diversity.
    """
    los = np.asarray(rx_pos, float) - np.asarray(tx_pos, float)
    d = float(np.linalg.norm(los))
    if d < 1e-12:
        raise DomainError("link endpoints coincide")
    u = los / d

    cos_tx = tx_faces.boresights @ u
    tx_offaxis = math.acos(max(-1.0, min(1.0, float(np.max(cos_tx)))))

    cos_rx = rx_faces.boresights @ (-u)
    incidences = np.arccos(np.clip(cos_rx, -1.0, 1.0))
    in_fov = [
        (int(i), float(incidences[i]))
        for i in range(rx_faces.n_faces)
        if incidences[i] <= rx_faces.fov_half_angle + 1e-12
    ]
    rx_incidence = float(np.min(incidences))
    in_beam = tx_offaxis <= tx_faces.divergence_half_angle + 1e-12 and len(in_fov) > 0
    return LinkGeometry(
        distance=d,
        tx_offaxis=tx_offaxis,
        rx_incidence=rx_incidence,
        rx_faces_in_fov=in_fov,
        in_beam=in_beam,
    )


def link_table(positions: np.ndarray, faces: FaceSet):
    """All-pairs link geometry over identically oriented nodes, vectorized.

    Returns (dist, in_beam, rx_cos_sum) where rx_cos_sum[i, j] is the sum of
    cos(incidence) over receive faces of j whose FoV contains i. Diagonal
    entries are zeroed/False.
    """
    p = np.asarray(positions, float)
    m = len(p)
    diff = p[None, :, :] - p[:, None, :]  # diff[i, j] = p_j - p_i
    dist = np.linalg.norm(diff, axis=2)
    np.fill_diagonal(dist, np.inf)
    u = diff / dist[:, :, None]

    # cos of angle between each boresight and the line of sight i -> j
    cos_tx = np.einsum("ijk,fk->ijf", u, faces.boresights)
    tx_ok = np.max(cos_tx, axis=2) >= math.cos(faces.divergence_half_angle) - 1e-12

    # receiver j sees direction -u[i, j]
    cos_rx = -cos_tx  # boresights are shared, so dot(-u_ij, b_f) = -dot(u_ij, b_f)
    fov_mask = cos_rx >= math.cos(faces.fov_half_angle) - 1e-12
    rx_cos_sum = np.sum(np.where(fov_mask, cos_rx, 0.0), axis=2)

    in_beam = tx_ok & np.any(fov_mask, axis=2)
    np.fill_diagonal(in_beam, False)
    d = dist.copy()
    np.fill_diagonal(d, 0.0)
    return d, in_beam, rx_cos_sum
