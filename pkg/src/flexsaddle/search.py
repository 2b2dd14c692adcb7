"""Index-k saddle search on the constraint manifold.

Each iteration takes a reflected projected-gradient step, pulls the trial
point back onto ``c(x) = 0`` with a Newton correction along the normal
space at the previous iterate, and then rotates the ``k`` direction vectors
towards the lowest eigenvectors of the projected Hessian with a deflated
update.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .framework import Configuration, Framework, FrameworkError, n_trivial
from .manifold import (
    ConstraintSet,
    FreeEdgeEnergy,
    ProjectionError,
    TangentFrame,
    newton_project,
    tangent_frame,
)

log = logging.getLogger(__name__)

VANISHING_NORM = 1e-14


class SearchConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SearchConfig:
    k: int = 1
    step_size: float = 0.01
    tol: float = 1e-12
    max_iters: int = 200_000
    projection_tol: float = 1e-12
    projection_max_iter: int = 25
    seed: int = 0
    # step for the direction-vector update; None means "same as step_size"
    rotation_step: Optional[float] = None
    max_backoff: int = 10
    init: str = "hessian"  # or "random"
    record_history: bool = True
    perturbation: float = 0.3  # tangent perturbation norm used by multi_start

    def __post_init__(self):
        if self.k < 1:
            raise SearchConfigError(f"k must be positive, got {self.k}")
        if not self.step_size > 0:
            raise SearchConfigError("step_size must be positive")
        if not self.tol > 0:
            raise SearchConfigError("tol must be positive")
        if self.max_iters < 1:
            raise SearchConfigError("max_iters must be >= 1")
        if self.rotation_step is not None and not self.rotation_step > 0:
            raise SearchConfigError("rotation_step must be positive")
        if self.init not in ("hessian", "random"):
            raise SearchConfigError(f"unknown init {self.init!r}")

    @property
    def beta(self) -> float:
        return self.step_size if self.rotation_step is None else self.rotation_step

    def check_index(self, tangent_dim: int) -> None:
        """Require ``0 < k < t`` with ``t`` the manifold dimension."""
        if not 0 < self.k < tangent_dim:
            raise SearchConfigError(
                f"index k={self.k} outside the admissible range 0 < k < {tangent_dim}"
            )

    def to_dict(self) -> dict:
        return {f: getattr(self, f) for f in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, data: dict) -> "SearchConfig":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise SearchConfigError(f"unknown search options: {sorted(unknown)}")
        return cls(**data)


@dataclass
class SearchState:
    x: np.ndarray
    v: list
    iter: int = 0
    last_move: float = np.inf


@dataclass
class SearchResult:
    converged: bool
    final: Configuration
    iterations: int
    history: list = field(default_factory=list)
    failure_reason: Optional[str] = None
    kkt_residual: float = np.nan
    constraint_residual: float = np.nan
    backoffs: int = 0
    reinitialized: int = 0
    seed: int = 0


def _reflect(g: np.ndarray, v: Sequence[np.ndarray]) -> np.ndarray:
    out = g.copy()
    for vi in v:
        out -= 2.0 * vi * (vi @ g)
    return out


def reflected_step(state: SearchState, frame: TangentFrame, energy, step_size: float) -> np.ndarray:
    """Trial point ``x - step * (I - 2 sum v_i v_i^T) P_T grad E``."""
    pg = frame.project(energy.gradient(state.x))
    return state.x - step_size * _reflect(pg, state.v)


def _random_tangent(frame: TangentFrame, rng: np.random.Generator) -> np.ndarray:
    w = frame.tangent @ rng.standard_normal(frame.tangent.shape[1])
    return w / np.linalg.norm(w)


def _orthonormalize(vs: list, frame: TangentFrame, rng: np.random.Generator) -> tuple:
    out, redrawn = [], 0
    for v in vs:
        w = frame.project(v)
        for u in out:
            w = w - u * (u @ w)
        nrm = np.linalg.norm(w)
        while nrm < 1e-10:
            redrawn += 1
            w = _random_tangent(frame, rng)
            for u in out:
                w = w - u * (u @ w)
            nrm = np.linalg.norm(w)
        out.append(w / nrm)
    return out, redrawn


def update_eigenvectors(
    v: Sequence[np.ndarray],
    frame_next: TangentFrame,
    hess_next: np.ndarray,
    beta: float,
    rng: Optional[np.random.Generator] = None,
) -> tuple:
    """Deflated rotation of the direction vectors at the new iterate.

    ``v_i <- P_T (v_i - beta (I - v_i v_i^T - 2 sum_{j<i} v_j v_j^T) H v_i)``
    using the previous vectors on the right-hand side, then normalization and
    a Gram-Schmidt pass. Returns ``(new_vectors, n_reinitialized)``.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    new, reinit = [], 0
    for i, vi in enumerate(v):
        hv = hess_next @ vi
        w = hv - vi * (vi @ hv)
        for vj in v[:i]:
            w -= 2.0 * vj * (vj @ hv)
        cand = frame_next.project(vi - beta * w)
        nrm = np.linalg.norm(cand)
        if nrm < VANISHING_NORM:
            reinit += 1
            cand = _random_tangent(frame_next, rng)
        else:
            cand = cand / nrm
        new.append(cand)
    new, redrawn = _orthonormalize(new, frame_next, rng)
    return new, reinit + redrawn


def _lagrangian_hessian(cs, energy, frame: TangentFrame) -> np.ndarray:
    eta = frame.multipliers(energy.gradient(frame.point))
    h = energy.hessian(frame.point) - cs.hessian_contraction(eta)
    p = frame.projector()
    out = p @ h @ p
    return 0.5 * (out + out.T)


def initial_vectors(cs, energy, frame: TangentFrame, k: int, init: str, rng) -> list:
    if k > frame.tangent.shape[1]:
        raise SearchConfigError(f"k={k} exceeds tangent dimension {frame.tangent.shape[1]}")
    if init == "hessian":
        h = _lagrangian_hessian(cs, energy, frame)
        red = frame.tangent.T @ h @ frame.tangent
        try:
            _, w = np.linalg.eigh(0.5 * (red + red.T))
            vs = [frame.tangent @ w[:, i] for i in range(k)]
            return _orthonormalize(vs, frame, rng)[0]
        except np.linalg.LinAlgError:
            log.warning("eigendecomposition failed; using random initial directions")
    return _orthonormalize([_random_tangent(frame, rng) for _ in range(k)], frame, rng)[0]


def saddle_search(cs, energy, x0, cfg: SearchConfig, v0: Optional[Sequence] = None) -> SearchResult:
    """Run the constrained index-k saddle search from ``x0``.

    ``cs`` and ``energy`` follow the duck-typed interfaces of
    :mod:`flexsaddle.manifold`. The loop stops when an accepted move is no
    longer than ``cfg.tol``.
    """
    rng = np.random.default_rng(cfg.seed)
    x = np.array(x0.coords if isinstance(x0, Configuration) else x0, dtype=float)
    dim = getattr(cs, "dim", 1)

    def fail(reason, it, x_cur, history, backoffs=0, reinit=0):
        log.info("search failed: %s", reason)
        c = cs.values(x_cur)
        return SearchResult(
            False, Configuration(dim, x_cur), it, history, reason,
            constraint_residual=float(np.max(np.abs(c))) if c.size else 0.0,
            backoffs=backoffs, reinitialized=reinit, seed=cfg.seed,
        )

    c0 = cs.values(x)
    if c0.size and np.max(np.abs(c0)) >= cfg.projection_tol:
        try:
            x = newton_project(cs, x, x, cfg.projection_tol, cfg.projection_max_iter).x
        except ProjectionError as exc:
            return fail(f"initial projection failed: {exc}", 0, x, [])
    frame = tangent_frame(cs, x)
    if not frame.licq:
        return fail(f"LICQ fails at the start (margin {frame.licq_margin:.3e})", 0, x, [])
    cfg.check_index(frame.tangent.shape[1])
    if v0 is None:
        v = initial_vectors(cs, energy, frame, cfg.k, cfg.init, rng)
    else:
        v = _orthonormalize([np.asarray(vi, dtype=float) for vi in v0], frame, rng)[0]

    state = SearchState(x, v)
    history = []
    backoffs = reinit = 0
    kkt = float(np.linalg.norm(frame.project(energy.gradient(x))))
    for it in range(1, cfg.max_iters + 1):
        jac = cs.jacobian(state.x)
        pg = frame.project(energy.gradient(state.x))
        direction = _reflect(pg, state.v)
        h = cfg.step_size
        for attempt in range(cfg.max_backoff + 1):
            try:
                proj = newton_project(
                    cs, state.x - h * direction, state.x, cfg.projection_tol, cfg.projection_max_iter, jac
                )
                break
            except ProjectionError as exc:
                if attempt == cfg.max_backoff:
                    return fail(
                        f"projection failed after {cfg.max_backoff} step halvings at iteration {it}: {exc}",
                        it - 1, state.x, history, backoffs, reinit,
                    )
                h *= 0.5
                backoffs += 1
                log.debug("iteration %d: projection failed, step -> %.3e", it, h)
        x_new = proj.x
        frame_new = tangent_frame(cs, x_new)
        if not frame_new.licq:
            return fail(
                f"LICQ lost at iteration {it} (margin {frame_new.licq_margin:.3e})",
                it - 1, state.x, history, backoffs, reinit,
            )
        hess = _lagrangian_hessian(cs, energy, frame_new)
        v, n_re = update_eigenvectors(state.v, frame_new, hess, cfg.beta, rng)
        reinit += n_re
        move = float(np.linalg.norm(x_new - state.x))
        kkt = float(np.linalg.norm(frame_new.project(energy.gradient(x_new))))
        if cfg.record_history:
            history.append((it, energy.value(x_new), move, proj.residual, kkt))
        state = SearchState(x_new, v, it, move)
        frame = frame_new
        if move <= cfg.tol:
            return SearchResult(
                True, Configuration(dim, state.x), it, history, None, kkt, proj.residual,
                backoffs, reinit, cfg.seed,
            )
    c = cs.values(state.x)
    return SearchResult(
        False, Configuration(dim, state.x), cfg.max_iters, history,
        f"no convergence in {cfg.max_iters} iterations (last move {state.last_move:.3e})",
        kkt, float(np.max(np.abs(c))), backoffs, reinit, cfg.seed,
    )


def problem_for(fw: Framework) -> tuple:
    """Constraint set and free-edge energy for a framework, validated."""
    try:
        cs = ConstraintSet.from_framework(fw)
    except FrameworkError as exc:
        raise SearchConfigError(str(exc)) from None
    if not fw.is_under_constrained:
        raise SearchConfigError(
            f"framework is not under-constrained: m + d(d+1)/2 = {fw.m + n_trivial(fw.dim)} >= nd = {fw.n_coords}"
        )
    return cs, FreeEdgeEnergy.from_framework(fw)


def run_search(fw: Framework, cfg: SearchConfig, v0: Optional[Sequence] = None) -> SearchResult:
    cs, energy = problem_for(fw)
    cfg.check_index(cs.tangent_dim)
    return saddle_search(cs, energy, fw.config.coords, cfg, v0)


def _perturbed_start(cs, x0: np.ndarray, scale: float, rng, cfg: SearchConfig) -> np.ndarray:
    frame = tangent_frame(cs, x0)
    direction = _random_tangent(frame, rng)
    h = scale
    for _ in range(cfg.max_backoff + 1):
        try:
            return newton_project(cs, x0 + h * direction, x0, cfg.projection_tol, cfg.projection_max_iter).x
        except ProjectionError:
            h *= 0.5
    return x0


def _sort_key(res: SearchResult):
    return (not res.converged, res.kkt_residual if np.isfinite(res.kkt_residual) else np.inf)


def multi_start(
    fw: Framework,
    cfg: SearchConfig,
    n_starts: int,
    starts: Optional[Sequence] = None,
    workers: Optional[int] = None,
) -> list:
    """Run the search from several starts; results sorted by (converged, KKT).

    Start 0 is the framework's own configuration; the others are random
    tangent perturbations of norm ``cfg.perturbation`` projected back onto
    the manifold, unless explicit ``starts`` are given. Each start uses its
    own child seed so the outcome does not depend on execution order.
    """
    if n_starts < 1:
        raise SearchConfigError("n_starts must be >= 1")
    cs, energy = problem_for(fw)
    cfg.check_index(cs.tangent_dim)
    children = np.random.SeedSequence(cfg.seed).spawn(n_starts)
    seeds = [int(c.generate_state(1)[0]) for c in children]
    seeds[0] = cfg.seed
    if starts is not None:
        points = [np.asarray(s.coords if isinstance(s, Configuration) else s, dtype=float) for s in starts]
        if len(points) != n_starts:
            raise SearchConfigError("len(starts) must equal n_starts")
    else:
        points = [fw.config.coords.copy()]
        for s in seeds[1:]:
            points.append(_perturbed_start(cs, fw.config.coords, cfg.perturbation, np.random.default_rng(s), cfg))
    jobs = [(p, replace(cfg, seed=s)) for p, s in zip(points, seeds)]

    def run(job):
        p, c = job
        return saddle_search(cs, energy, p, c)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(run, jobs))
    else:
        results = [run(j) for j in jobs]
    order = sorted(range(n_starts), key=lambda i: (_sort_key(results[i]), i))
    return [results[i] for i in order]
