"""Tracing nonlinear flexes out of a singular configuration.

The branch lives on the full level set: every edge (the free one frozen at
its current length) plus the pins. Steps are predictor-corrector: a
tangent prediction followed by a minimum-norm Gauss-Newton correction in
the hyperplane orthogonal to the current tangent.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .framework import Framework
from .manifold import ConstraintSet


class ContinuationError(RuntimeError):
    pass


@dataclass
class FlexPath:
    framework: Framework
    steps: list
    arc_step: float
    residuals: list
    direction_sign: int = 1
    arc: list = field(default_factory=list)
    failed: bool = False
    failure_reason: Optional[str] = None

    def __len__(self):
        return len(self.steps)

    def to_jsonl(self) -> str:
        lines = []
        for t, x, r in zip(self.arc, self.steps, self.residuals):
            lines.append(json.dumps({"t": float(t), "coords": [float(c) for c in x], "residual": float(r)}))
        return "\n".join(lines) + "\n"


def full_constraints(fw: Framework) -> ConstraintSet:
    """All ``m`` edges at the framework's lengths plus the pins."""
    return ConstraintSet.from_framework(fw, include_free_edge=True)


def edge_length_residual(fw: Framework, x: np.ndarray) -> float:
    lengths = np.sqrt(kernels.squared_lengths(x, fw.topology.edge_array, fw.dim))
    return float(np.max(np.abs(lengths - fw.rest_lengths)))


def _null_direction(jac: np.ndarray, prev: np.ndarray) -> np.ndarray:
    """Unit null vector of ``jac`` closest to ``prev``."""
    n = jac.shape[1]
    _, s, vt = np.linalg.svd(jac, full_matrices=True)
    s_full = np.zeros(n)
    s_full[: s.size] = s
    rank = int(np.sum(s_full > 1e-6 * s_full[0]))
    basis = vt[min(rank, n - 1):]
    t = basis.T @ (basis @ prev)
    nrm = np.linalg.norm(t)
    if nrm < 1e-12:
        t = vt[-1]
        nrm = 1.0
    t = t / nrm
    return t if t @ prev >= 0 else -t


def _correct(cs, x_pred, tangent, tol, max_iter):
    x = x_pred.copy()
    c = cs.values(x)
    res0 = float(np.max(np.abs(c)))
    res = res0
    for _ in range(max_iter):
        if res < tol:
            return x, res
        a = np.vstack([cs.jacobian(x), tangent[None, :]])
        rhs = -np.concatenate([c, [tangent @ (x - x_pred)]])
        dx = np.linalg.lstsq(a, rhs, rcond=None)[0]
        x = x + dx
        c = cs.values(x)
        res = float(np.max(np.abs(c)))
        if not np.isfinite(res) or res > 1e3 * max(res0, 1.0):
            return None, res
    return (x, res) if res < tol else (None, res)


def follow_branch(
    fw: Framework,
    direction,
    arc_step: float = 1e-2,
    n_steps: int = 50,
    path_tol: float = 1e-8,
    sign: int = 1,
    max_halvings: int = 5,
    max_correction_ratio: float = 0.25,
    corrector_tol: float = 1e-12,
    corrector_max_iter: int = 20,
    coords=None,
) -> FlexPath:
    """Follow the nonlinear flex leaving ``fw`` along ``sign * direction``.

    ``direction`` must be an ambient unit vector that respects the pins (the
    pinned-gauge realizable directions of a certificate). A step is rejected
    when the corrector diverges, misses ``path_tol``, or has to move further
    than ``max_correction_ratio`` times the arc step; rejected steps are
    retried with half the step up to ``max_halvings`` times, after which the
    path is returned truncated with ``failed=True``. Starting along a
    direction that is not realizable trips the correction-ratio guard on the
    first step.
    """
    if coords is not None:
        fw = fw.with_coords(coords)
    cs = full_constraints(fw)
    x = fw.config.coords.copy()
    t = sign * np.asarray(direction, dtype=float)
    nrm = np.linalg.norm(t)
    if nrm == 0:
        raise ContinuationError("zero direction")
    t = t / nrm
    path = FlexPath(fw, [x.copy()], arc_step, [edge_length_residual(fw, x)], int(np.sign(sign) or 1), [0.0])
    s = 0.0
    for step in range(1, n_steps + 1):
        h = arc_step
        accepted = None
        last = "corrector failed"
        for _ in range(max_halvings + 1):
            x_pred = x + h * t
            x_new, res = _correct(cs, x_pred, t, corrector_tol, corrector_max_iter)
            if x_new is None:
                last = f"corrector did not converge (|c|_inf = {res:.3e})"
            elif np.linalg.norm(x_new - x_pred) > max_correction_ratio * h:
                last = f"correction {np.linalg.norm(x_new - x_pred):.3e} too large for step {h:.3e}"
            elif edge_length_residual(fw, x_new) >= path_tol:
                last = f"edge residual {edge_length_residual(fw, x_new):.3e} above tolerance"
            else:
                accepted = x_new
                break
            h *= 0.5
        if accepted is None:
            path.failed = True
            path.failure_reason = f"step {step}: {last} after {max_halvings} halvings"
            break
        t = _null_direction(cs.jacobian(accepted), t)
        s += float(np.linalg.norm(accepted - x))
        x = accepted
        path.steps.append(x.copy())
        path.residuals.append(edge_length_residual(fw, x))
        path.arc.append(s)
    return path


def reparameterize_free_edge(path: FlexPath) -> list:
    """``(arc position, free-edge length)`` along the path."""
    fw = path.framework
    a, b = fw.topology.edges[fw.topology.free_edge]
    d = fw.dim
    out = []
    arc = path.arc if len(path.arc) == len(path.steps) else np.concatenate(
        [[0.0], np.cumsum([np.linalg.norm(q - p) for p, q in zip(path.steps, path.steps[1:])])]
    )
    for s, x in zip(arc, path.steps):
        out.append((float(s), float(np.linalg.norm(x[a * d : (a + 1) * d] - x[b * d : (b + 1) * d]))))
    return out
