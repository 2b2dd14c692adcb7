"""Bar frameworks and their rigidity-theoretic primitives.

A configuration of ``n`` vertices in ``R^d`` is stored as one flat vector of
length ``n*d``; vertex ``i`` owns entries ``[i*d, (i+1)*d)``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels

DEFAULT_RANK_TOL = 1e-8


class FrameworkError(ValueError):
    """Invalid framework data (bad indices, lengths, pins)."""


class DegenerateConfigurationWarning(UserWarning):
    """Rigid-body generators are linearly dependent at this configuration."""


def n_trivial(dim: int) -> int:
    """Dimension of the rigid-body motion group in ``R^dim``."""
    return dim * (dim + 1) // 2


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Configuration:
    dim: int
    coords: np.ndarray

    def __post_init__(self):
        if int(self.dim) < 1:
            raise FrameworkError(f"dimension must be >= 1, got {self.dim}")
        coords = _frozen(self.coords).ravel()
        if coords.size % self.dim:
            raise FrameworkError(f"{coords.size} coordinates is not a multiple of dim={self.dim}")
        if not np.all(np.isfinite(coords)):
            raise FrameworkError("coordinates must be finite")
        coords.setflags(write=False)
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "coords", coords)

    @classmethod
    def from_points(cls, points) -> "Configuration":
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return cls(pts.shape[1], pts.ravel())

    @property
    def n_vertices(self) -> int:
        return self.coords.size // self.dim

    @property
    def points(self) -> np.ndarray:
        return self.coords.reshape(-1, self.dim)

    def __eq__(self, other):
        if not isinstance(other, Configuration):
            return NotImplemented
        return self.dim == other.dim and np.array_equal(self.coords, other.coords)

    __hash__ = None


@dataclass(frozen=True)
class Topology:
    n_vertices: int
    edges: tuple
    free_edge: int = 0

    def __post_init__(self):
        edges = tuple((int(a), int(b)) for a, b in self.edges)
        seen = set()
        for k, (a, b) in enumerate(edges):
            if a == b:
                raise FrameworkError(f"edge {k} is a loop ({a}, {b})")
            if not (0 <= a < self.n_vertices and 0 <= b < self.n_vertices):
                raise FrameworkError(f"edge {k} = ({a}, {b}) references a missing vertex")
            key = frozenset((a, b))
            if key in seen:
                raise FrameworkError(f"edge {k} = ({a}, {b}) is a duplicate")
            seen.add(key)
        if edges and not 0 <= self.free_edge < len(edges):
            raise FrameworkError(f"free_edge {self.free_edge} out of range")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "n_vertices", int(self.n_vertices))
        object.__setattr__(self, "free_edge", int(self.free_edge))
        arr = np.array(edges, dtype=np.intp).reshape(-1, 2)
        arr.setflags(write=False)
        object.__setattr__(self, "_edge_array", arr)

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def edge_array(self) -> np.ndarray:
        return self._edge_array

    @property
    def fixed_edges(self) -> np.ndarray:
        """Indices of all edges except the free one, in order."""
        return np.array([i for i in range(self.m) if i != self.free_edge], dtype=np.intp)


@dataclass(frozen=True)
class Pin:
    vertex: int
    axis: int
    value: float

    def coordinate(self, dim: int) -> int:
        return self.vertex * dim + self.axis


@dataclass(frozen=True)
class PinningScheme:
    pins: tuple = ()

    def __post_init__(self):
        pins = tuple(p if isinstance(p, Pin) else Pin(int(p[0]), int(p[1]), float(p[2])) for p in self.pins)
        object.__setattr__(self, "pins", pins)

    def __len__(self):
        return len(self.pins)

    def __iter__(self):
        return iter(self.pins)

    def validate(self, dim: int, n_vertices: int) -> None:
        if len(self.pins) != n_trivial(dim):
            raise FrameworkError(f"need exactly {n_trivial(dim)} pins in d={dim}, got {len(self.pins)}")
        seen = set()
        for p in self.pins:
            if not 0 <= p.axis < dim:
                raise FrameworkError(f"pin axis {p.axis} out of range for d={dim}")
            if not 0 <= p.vertex < n_vertices:
                raise FrameworkError(f"pin vertex {p.vertex} out of range")
            if (p.vertex, p.axis) in seen:
                raise FrameworkError(f"duplicate pin on vertex {p.vertex}, axis {p.axis}")
            seen.add((p.vertex, p.axis))

    @classmethod
    def from_config(cls, config: Configuration, spec: Sequence[tuple]) -> "PinningScheme":
        """Pin ``(vertex, axis)`` pairs at their current coordinate values."""
        return cls(tuple(Pin(v, a, float(config.coords[v * config.dim + a])) for v, a in spec))


@dataclass(frozen=True)
class Framework:
    """Topology + geometry + rest lengths + pins.

    The pinning scheme may be empty for purely geometric queries (rigidity
    matrix, flex spaces); anything that builds a constraint set requires a
    complete scheme.
    """

    topology: Topology
    config: Configuration
    rest_lengths: np.ndarray
    pins: PinningScheme = field(default_factory=PinningScheme)

    def __post_init__(self):
        if self.config.n_vertices != self.topology.n_vertices:
            raise FrameworkError(
                f"configuration has {self.config.n_vertices} vertices, topology {self.topology.n_vertices}"
            )
        rest = _frozen(self.rest_lengths).ravel()
        rest.setflags(write=False)
        if rest.size != self.topology.m:
            raise FrameworkError(f"expected {self.topology.m} rest lengths, got {rest.size}")
        if np.any(~np.isfinite(rest)) or np.any(rest <= 0):
            raise FrameworkError("rest lengths must be finite and strictly positive")
        object.__setattr__(self, "rest_lengths", rest)
        if not isinstance(self.pins, PinningScheme):
            object.__setattr__(self, "pins", PinningScheme(tuple(self.pins)))
        if len(self.pins):
            self.pins.validate(self.dim, self.n)
            for p in self.pins:
                got = self.config.coords[p.coordinate(self.dim)]
                if abs(got - p.value) > 1e-9 * max(1.0, abs(p.value)):
                    raise FrameworkError(
                        f"pin (vertex {p.vertex}, axis {p.axis}) = {p.value} disagrees with coordinate {got}"
                    )

    @classmethod
    def from_points(cls, points, edges, free_edge=0, rest_lengths=None, pins=None) -> "Framework":
        """Build a framework; rest lengths default to the measured lengths.

        ``pins`` is a sequence of ``(vertex, axis)`` pairs pinned at their
        current values, or of full ``(vertex, axis, value)`` triples.
        """
        config = Configuration.from_points(points)
        topo = Topology(config.n_vertices, tuple(edges), free_edge)
        if rest_lengths is None:
            rest_lengths = np.sqrt(kernels.squared_lengths(config.coords, topo.edge_array, config.dim))
        if pins is None:
            scheme = PinningScheme()
        elif all(len(p) == 2 for p in pins):
            scheme = PinningScheme.from_config(config, pins)
        else:
            scheme = PinningScheme(tuple(pins))
        return cls(topo, config, rest_lengths, scheme)

    @property
    def dim(self) -> int:
        return self.config.dim

    @property
    def n(self) -> int:
        return self.topology.n_vertices

    @property
    def m(self) -> int:
        return self.topology.m

    @property
    def n_coords(self) -> int:
        return self.n * self.dim

    @property
    def is_under_constrained(self) -> bool:
        """Maxwell count ``m + d(d+1)/2 < n d``."""
        return self.m + n_trivial(self.dim) < self.n_coords

    def with_coords(self, coords) -> "Framework":
        """Same bars, lengths and pins at new coordinates.

        The free edge's recorded length is refreshed to the new geometry.
        """
        config = Configuration(self.dim, coords)
        rest = np.array(self.rest_lengths)
        a, b = self.topology.edges[self.topology.free_edge]
        p = config.points
        free_len = float(np.linalg.norm(p[a] - p[b]))
        if free_len > 0:
            rest[self.topology.free_edge] = free_len
        pins = PinningScheme(tuple(Pin(p.vertex, p.axis, float(config.coords[p.coordinate(self.dim)])) for p in self.pins))
        return Framework(self.topology, config, rest, pins)

    def __eq__(self, other):
        if not isinstance(other, Framework):
            return NotImplemented
        return (
            self.topology == other.topology
            and self.config == other.config
            and np.array_equal(self.rest_lengths, other.rest_lengths)
            and self.pins == other.pins
        )

    __hash__ = None


def _check_edge(fw_or_topo, i: int) -> None:
    m = fw_or_topo.m
    if not 0 <= i < m:
        raise IndexError(f"edge index {i} out of range for {m} edges")


def edge_residual(fw: Framework, i: int) -> float:
    """``|p_a - p_b|^2 - l_i^2`` for edge ``i``."""
    _check_edge(fw, i)
    a, b = fw.topology.edges[i]
    p = fw.config.points
    d = p[a] - p[b]
    return float(d @ d - fw.rest_lengths[i] ** 2)


def free_edge_energy(fw: Framework) -> float:
    """Squared length of the free edge (no rest-length offset)."""
    a, b = fw.topology.edges[fw.topology.free_edge]
    p = fw.config.points
    d = p[a] - p[b]
    return float(d @ d)


def edge_gradient(fw: Framework, i: int) -> np.ndarray:
    _check_edge(fw, i)
    return kernels.rigidity_rows(fw.config.coords, fw.topology.edge_array[i : i + 1], fw.dim)[0]


def edge_hessian(topology: Topology, i: int, dim: int) -> np.ndarray:
    """Constant Hessian of the squared length of edge ``i``."""
    _check_edge(topology, i)
    return kernels.laplacian_hessian(topology.edge_array[i : i + 1], np.ones(1), topology.n_vertices, dim)


def rigidity_matrix(fw: Framework) -> np.ndarray:
    """``m x nd`` Jacobian of all squared lengths, free edge included."""
    return kernels.rigidity_rows(fw.config.coords, fw.topology.edge_array, fw.dim)


def numerical_rank(singular_values, rank_tol: float = DEFAULT_RANK_TOL) -> int:
    sv = np.asarray(singular_values)
    if sv.size == 0 or sv[0] == 0:
        return 0
    return int(np.sum(sv > rank_tol * sv[0]))


def null_space(a: np.ndarray, rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Orthonormal basis of the right null space, relative SVD threshold."""
    a = np.atleast_2d(a)
    if a.shape[0] == 0:
        return np.eye(a.shape[1])
    _, s, vt = np.linalg.svd(a)
    r = numerical_rank(s, rank_tol)
    return vt[r:].T.copy()


def rigid_body_basis(config: Configuration, rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Orthonormal basis of the infinitesimal rigid motions at ``config``.

    Columns are the ``d`` translations followed by the ``d(d-1)/2``
    rotations (taken about the centroid), orthonormalized in that order.
    When the generators are dependent (e.g. collinear points in 3D) the
    dependent columns are dropped and a ``DegenerateConfigurationWarning`` is
    issued.
    """
    d, n = config.dim, config.n_vertices
    pts = config.points - config.points.mean(axis=0)
    cols = []
    for axis in range(d):
        t = np.zeros((n, d))
        t[:, axis] = 1.0
        cols.append(t.ravel())
    for alpha in range(d):
        for beta in range(alpha + 1, d):
            r = np.zeros((n, d))
            r[:, alpha] = -pts[:, beta]
            r[:, beta] = pts[:, alpha]
            cols.append(r.ravel())
    gen = np.column_stack(cols)
    q, r = np.linalg.qr(gen)
    diag = np.abs(np.diag(r))
    scale = max(np.max(np.linalg.norm(gen, axis=0)), 1.0)
    keep = diag > rank_tol * scale
    if not np.all(keep):
        warnings.warn(
            f"rigid-body generators have rank {int(keep.sum())} < {gen.shape[1]}",
            DegenerateConfigurationWarning,
            stacklevel=2,
        )
    return q[:, keep]


def nontrivial_flex_basis(fw: Framework, rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Orthonormal basis of ``null R(p)`` orthogonal to the rigid motions."""
    null = null_space(rigidity_matrix(fw), rank_tol)
    triv = rigid_body_basis(fw.config, rank_tol)
    reduced = null - triv @ (triv.T @ null)
    if reduced.shape[1] == 0:
        return reduced
    u, s, _ = np.linalg.svd(reduced, full_matrices=False)
    # columns of `null` are unit vectors, so an absolute threshold is meaningful
    keep = s > 1e-6
    return u[:, keep]


def degenerate_edges(fw: Framework, coords: Optional[np.ndarray] = None, tol: float = 1e-12) -> list:
    """Edges whose endpoints coincide (their rigidity row vanishes)."""
    x = fw.config.coords if coords is None else np.asarray(coords, dtype=float)
    sq = kernels.squared_lengths(x, fw.topology.edge_array, fw.dim)
    return [i for i, v in enumerate(sq) if v <= tol]
