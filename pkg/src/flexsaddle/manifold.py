"""The constraint manifold ``c(x) = 0``: fixed bar lengths plus pins.

Functions here are written against a small duck-typed interface so the
saddle search can also run on toy problems: a constraint object needs
``n_coords``, ``values(x)``, ``jacobian(x)`` and ``hessian_contraction(w)``
(returning ``sum_i w_i * hess c_i``). An energy object needs ``value``,
``gradient`` and ``hessian``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .framework import DEFAULT_RANK_TOL, Configuration, Framework, Pin, Topology

DEFAULT_LICQ_TOL = 1e-8
PROJECTION_TOL = 1e-12
PROJECTION_MAX_ITER = 25


class LICQError(ArithmeticError):
    """Constraint gradients are numerically dependent at the query point."""

    def __init__(self, margin: float, message: str = ""):
        self.margin = margin
        super().__init__(message or f"LICQ fails: smallest constraint singular value {margin:.3e}")


class ProjectionError(ArithmeticError):
    """Newton projection onto the manifold did not converge."""

    def __init__(self, residual: float, iterations: int):
        self.residual = residual
        self.iterations = iterations
        super().__init__(f"projection failed after {iterations} iterations, |c|_inf = {residual:.3e}")


def _as_array(x) -> np.ndarray:
    if isinstance(x, Configuration):
        return x.coords
    return np.asarray(x, dtype=float)


class ConstraintSet:
    """Squared-length constraints on selected edges followed by affine pins.

    By default the free edge is left out, giving the stacked system
    ``(f_2, ..., f_m, g_1, ..., g_{d(d+1)/2})``. Passing ``edge_indices``
    selects other subsets (the continuation uses all ``m`` edges).
    """

    def __init__(
        self,
        topology: Topology,
        rest_lengths,
        pins: Sequence[Pin],
        dim: int,
        edge_indices: Optional[Sequence[int]] = None,
    ):
        self.topology = topology
        self.dim = int(dim)
        if edge_indices is None:
            edge_indices = topology.fixed_edges
        self.edge_indices = np.asarray(edge_indices, dtype=np.intp)
        self.edges = np.ascontiguousarray(topology.edge_array[self.edge_indices])
        self.rest_sq = np.asarray(rest_lengths, dtype=float)[self.edge_indices] ** 2
        self.pins = tuple(pins)
        self.pin_coords = np.array([p.coordinate(self.dim) for p in self.pins], dtype=np.intp)
        self.pin_values = np.array([p.value for p in self.pins], dtype=float)
        self.n_coords = topology.n_vertices * self.dim
        self._pin_rows = np.zeros((len(self.pins), self.n_coords))
        self._pin_rows[np.arange(len(self.pins)), self.pin_coords] = 1.0

    @classmethod
    def from_framework(cls, fw: Framework, include_free_edge: bool = False) -> "ConstraintSet":
        fw.pins.validate(fw.dim, fw.n)
        idx = np.arange(fw.m) if include_free_edge else fw.topology.fixed_edges
        return cls(fw.topology, fw.rest_lengths, fw.pins.pins, fw.dim, idx)

    @property
    def n_edges(self) -> int:
        return len(self.edge_indices)

    @property
    def n_constraints(self) -> int:
        return self.n_edges + len(self.pins)

    @property
    def tangent_dim(self) -> int:
        return self.n_coords - self.n_constraints

    def values(self, x) -> np.ndarray:
        x = _as_array(x)
        if x.shape != (self.n_coords,):
            raise ValueError(f"expected {self.n_coords} coordinates, got shape {x.shape}")
        edge = kernels.squared_lengths(x, self.edges, self.dim) - self.rest_sq
        return np.concatenate([edge, x[self.pin_coords] - self.pin_values])

    def jacobian(self, x) -> np.ndarray:
        x = _as_array(x)
        if x.shape != (self.n_coords,):
            raise ValueError(f"expected {self.n_coords} coordinates, got shape {x.shape}")
        return np.vstack([kernels.rigidity_rows(x, self.edges, self.dim), self._pin_rows])

    def hessian_contraction(self, weights) -> np.ndarray:
        """``sum_i w_i * hess c_i``; pins are affine and contribute nothing."""
        w = np.asarray(weights, dtype=float)[: self.n_edges]
        return kernels.laplacian_hessian(self.edges, w, self.topology.n_vertices, self.dim)


class FreeEdgeEnergy:
    """``E(p) = |p_a - p_b|^2`` for the free edge ``(a, b)``."""

    def __init__(self, topology: Topology, dim: int):
        self.dim = dim
        self.edge = np.ascontiguousarray(topology.edge_array[topology.free_edge : topology.free_edge + 1])
        self._hess = kernels.laplacian_hessian(self.edge, np.ones(1), topology.n_vertices, dim)
        self._hess.setflags(write=False)

    @classmethod
    def from_framework(cls, fw: Framework) -> "FreeEdgeEnergy":
        return cls(fw.topology, fw.dim)

    def value(self, x) -> float:
        return float(kernels.squared_lengths(_as_array(x), self.edge, self.dim)[0])

    def gradient(self, x) -> np.ndarray:
        return kernels.rigidity_rows(_as_array(x), self.edge, self.dim)[0]

    def hessian(self, x=None) -> np.ndarray:
        return self._hess


@dataclass(frozen=True)
class TangentFrame:
    point: np.ndarray
    tangent: np.ndarray  # (N, t) orthonormal
    normal: np.ndarray  # (N, r) orthonormal, spans the constraint gradients
    licq_margin: float  # smallest singular value of the constraint Jacobian
    largest_sv: float
    rank: int
    # thin SVD pieces of the Jacobian, reused for multipliers
    _u: np.ndarray
    _s: np.ndarray

    @property
    def licq(self) -> bool:
        return self.rank == self._u.shape[0]

    def projector(self) -> np.ndarray:
        return np.eye(self.point.size) - self.normal @ self.normal.T

    def project(self, v) -> np.ndarray:
        """Tangential component of ``v`` (vector or matrix of columns)."""
        return v - self.normal @ (self.normal.T @ v)

    def multipliers(self, grad) -> np.ndarray:
        """Least-squares ``eta`` with ``J^T eta ~ grad``."""
        r = self.rank
        return self._u[:, :r] @ ((self.normal[:, :r].T @ grad) / self._s[:r])


def tangent_frame(cs, x, tol: float = DEFAULT_LICQ_TOL) -> TangentFrame:
    x = _as_array(x)
    jac = cs.jacobian(x)
    k, n = jac.shape
    if k == 0:
        return TangentFrame(x, np.eye(n), np.zeros((n, 0)), np.inf, 0.0, 0, np.zeros((0, 0)), np.zeros(0))
    u, s, vt = np.linalg.svd(jac, full_matrices=True)
    smax = s[0] if s.size else 0.0
    margin = float(s[-1]) if s.size == k else 0.0
    rank = int(np.sum(s > tol * smax)) if smax > 0 else 0
    return TangentFrame(
        point=x,
        tangent=vt[rank:].T,
        normal=vt[:rank].T,
        licq_margin=margin,
        largest_sv=float(smax),
        rank=rank,
        _u=u,
        _s=s,
    )


def constraint_values(cs, x) -> np.ndarray:
    return cs.values(x)


def constraint_jacobian(cs, x) -> np.ndarray:
    return cs.jacobian(x)


def licq_check(cs, x, tol: float = DEFAULT_LICQ_TOL) -> tuple:
    """``(holds, smallest singular value)`` of the constraint Jacobian."""
    frame = tangent_frame(cs, x, tol)
    return frame.licq, frame.licq_margin


def _require_licq(cs, x, tol: float = DEFAULT_LICQ_TOL) -> TangentFrame:
    frame = tangent_frame(cs, x, tol)
    if not frame.licq:
        raise LICQError(frame.licq_margin)
    return frame


def tangent_projector(cs, x, tol: float = DEFAULT_LICQ_TOL) -> np.ndarray:
    """``I - J^T (J J^T)^{-1} J`` built from an orthonormal normal basis."""
    return _require_licq(cs, x, tol).projector()


def lagrange_multipliers(cs, x, energy, frame: Optional[TangentFrame] = None) -> np.ndarray:
    frame = frame or _require_licq(cs, x)
    return frame.multipliers(energy.gradient(frame.point))


def kkt_residual(cs, x, energy, frame: Optional[TangentFrame] = None) -> float:
    """``|grad E - J^T eta|`` with least-squares multipliers."""
    frame = frame or _require_licq(cs, x)
    g = energy.gradient(frame.point)
    return float(np.linalg.norm(frame.project(g)))


def projected_hessian(cs, x, energy, frame: Optional[TangentFrame] = None) -> np.ndarray:
    """``P (hess E - sum eta_i hess c_i) P`` with multipliers taken at ``x``."""
    frame = frame or _require_licq(cs, x)
    eta = frame.multipliers(energy.gradient(frame.point))
    h = energy.hessian(frame.point) - cs.hessian_contraction(eta)
    p = frame.projector()
    out = p @ h @ p
    return 0.5 * (out + out.T)


def tangent_hessian(cs, x, energy, frame: Optional[TangentFrame] = None) -> tuple:
    """Projected Hessian restricted to the tangent basis: ``(T^T H T, frame)``."""
    frame = frame or _require_licq(cs, x)
    eta = frame.multipliers(energy.gradient(frame.point))
    h = energy.hessian(frame.point) - cs.hessian_contraction(eta)
    t = frame.tangent
    red = t.T @ h @ t
    return 0.5 * (red + red.T), frame


@dataclass(frozen=True)
class ProjectionResult:
    x: np.ndarray
    alpha: np.ndarray
    iterations: int
    residual: float


def newton_project(
    cs,
    x_tilde,
    x_base,
    tol: float = PROJECTION_TOL,
    max_iter: int = PROJECTION_MAX_ITER,
    base_jacobian: Optional[np.ndarray] = None,
) -> ProjectionResult:
    """Return ``x = x_tilde + J(x_base)^T alpha`` with ``|c(x)|_inf < tol``.

    Newton's method on ``h(alpha) = c(x_tilde + J_b^T alpha)``, whose
    Jacobian is ``J(x) J_b^T``. Raises ``ProjectionError`` on failure.
    """
    x_tilde = _as_array(x_tilde)
    jb_t = (cs.jacobian(_as_array(x_base)) if base_jacobian is None else base_jacobian).T
    alpha = np.zeros(jb_t.shape[1])
    x = x_tilde.copy()
    c = cs.values(x)
    res = float(np.max(np.abs(c))) if c.size else 0.0
    it = 0
    while res >= tol:
        if it >= max_iter or not np.isfinite(res):
            raise ProjectionError(res, it)
        try:
            step = np.linalg.solve(cs.jacobian(x) @ jb_t, c)
        except np.linalg.LinAlgError:
            raise ProjectionError(res, it) from None
        alpha -= step
        x = x_tilde + jb_t @ alpha
        c = cs.values(x)
        res = float(np.max(np.abs(c)))
        it += 1
    return ProjectionResult(x, alpha, it, res)


__all__ = [
    "DEFAULT_RANK_TOL",
    "ConstraintSet",
    "FreeEdgeEnergy",
    "LICQError",
    "ProjectionError",
    "ProjectionResult",
    "TangentFrame",
    "constraint_jacobian",
    "constraint_values",
    "kkt_residual",
    "lagrange_multipliers",
    "licq_check",
    "newton_project",
    "projected_hessian",
    "tangent_frame",
    "tangent_hessian",
    "tangent_projector",
]
