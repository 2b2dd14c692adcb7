"""Certificates for converged saddles and the second-order stress test."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .framework import (
    DEFAULT_RANK_TOL,
    Framework,
    degenerate_edges,
    n_trivial,
    nontrivial_flex_basis,
    numerical_rank,
    rigid_body_basis,
    rigidity_matrix,
)
from .manifold import DEFAULT_LICQ_TOL, ConstraintSet, FreeEdgeEnergy, tangent_frame

DEFAULT_DEGENERACY_TOL = 1e-7
STRESS_TOL = 1e-8


@dataclass(frozen=True)
class SelfStressBasis:
    matrix: np.ndarray  # (n_stresses, m), rows orthonormal

    def __len__(self):
        return self.matrix.shape[0]


def self_stresses(fw: Framework, rank_tol: float = DEFAULT_RANK_TOL) -> SelfStressBasis:
    """Orthonormal basis of ``{w : w^T R(p) = 0}``; the free edge has a column."""
    r = rigidity_matrix(fw)
    if r.shape[0] == 0:
        return SelfStressBasis(np.zeros((0, 0)))
    u, s, _ = np.linalg.svd(r, full_matrices=True)
    rank = numerical_rank(s, rank_tol)
    return SelfStressBasis(u[:, rank:].T.copy())


@dataclass
class StressTestResult:
    status: str  # solved | definite | all_pass | no_flex | unsupported
    forms: np.ndarray  # (n_stresses, s, s)
    directions: list  # unit coefficient vectors, first nonzero entry positive
    ambient: list  # V @ a, orthogonal to rigid motions
    pinned: list = field(default_factory=list)  # same rays, pins held fixed


def _canonical_sign(a: np.ndarray) -> np.ndarray:
    for c in a:
        if abs(c) > 1e-12:
            return a if c > 0 else -a
    return a


def _zero_rays_2x2(q: np.ndarray, tol: float) -> list:
    """Real unit solutions of ``a^T q a = 0`` for a symmetric 2x2 form."""
    lam, vec = np.linalg.eigh(q)
    scale = np.max(np.abs(lam))
    lo, hi = lam
    if lo < -tol * scale and hi > tol * scale:
        rays = [np.sqrt(hi) * vec[:, 0] + s * np.sqrt(-lo) * vec[:, 1] for s in (1.0, -1.0)]
        return [r / np.linalg.norm(r) for r in rays]
    if abs(lo) <= tol * scale:
        return [vec[:, 0]]
    if abs(hi) <= tol * scale:
        return [vec[:, 1]]
    return []


def _pin_gauge(fw: Framework, u: np.ndarray) -> Optional[np.ndarray]:
    """Add the rigid motion that zeroes the pinned coordinates of ``u``."""
    if not len(fw.pins):
        return None
    coords = [p.coordinate(fw.dim) for p in fw.pins]
    triv = rigid_body_basis(fw.config)
    pt = triv[coords]
    if pt.shape[0] != pt.shape[1] or abs(np.linalg.det(pt)) < 1e-12:
        return None
    w = u - triv @ np.linalg.solve(pt, u[coords])
    return w / np.linalg.norm(w)


def stress_test(fw: Framework, flex_basis: np.ndarray, stresses) -> StressTestResult:
    """Second-order stress test on the span of ``flex_basis``.

    For each self-stress ``w`` the quadratic form
    ``Q_w(a) = sum_e w_e * 2 |v_{e,1} - v_{e,2}|^2`` with ``v = V a`` is
    built; a direction can come from a nonlinear flex only if every form
    vanishes on it. Zero rays are computed exactly for ``s <= 2`` flexes;
    for larger ``s`` only the forms are returned.
    """
    v = np.asarray(flex_basis, dtype=float)
    omega = stresses.matrix if isinstance(stresses, SelfStressBasis) else np.atleast_2d(stresses)
    s = v.shape[1]
    if s == 0:
        return StressTestResult("no_flex", np.zeros((omega.shape[0], 0, 0)), [], [])
    if omega.shape[0] == 0:
        forms = np.zeros((0, s, s))
    else:
        forms = kernels.stress_forms(v, fw.topology.edge_array, omega, fw.dim)
    # size of each form if all edge terms added with the same sign
    scales = np.array(
        [np.sum(np.abs(kernels.stress_forms(v, fw.topology.edge_array, np.abs(w)[None, :], fw.dim)[0])) for w in omega]
    ) if omega.shape[0] else np.zeros(0)
    norms = np.array([np.linalg.norm(q) for q in forms])
    live = [i for i in range(len(forms)) if norms[i] > STRESS_TOL * max(scales[i], 1e-300)]
    if not live:
        if s == 1:
            a = [np.ones(1)]
            return StressTestResult("solved", forms, a, [v[:, 0].copy()], [_pin_gauge(fw, v[:, 0])])
        return StressTestResult("all_pass", forms, [], [])
    if s > 2:
        return StressTestResult("unsupported", forms, [], [])
    if s == 1:
        return StressTestResult("definite", forms, [], [])
    first = max(live, key=lambda i: -np.linalg.det(forms[i] / norms[i]))
    candidates = _zero_rays_2x2(forms[first], STRESS_TOL)
    rays = []
    for a in candidates:
        if all(abs(a @ forms[i] @ a) <= STRESS_TOL * norms[i] * 10 for i in live if i != first):
            rays.append(_canonical_sign(a))
    if not rays:
        return StressTestResult("definite", forms, [], [])
    ambient = [v @ a for a in rays]
    return StressTestResult("solved", forms, rays, ambient, [_pin_gauge(fw, u) for u in ambient])


@dataclass
class SingularityCertificate:
    kkt_residual: float
    licq_margin: float
    tangent_dim: int
    eigenvalues: list
    index: int
    degenerate: bool
    rigidity_rank: int
    nontrivial_flex_dim: int
    self_stress_dim: int
    realizable_directions: list
    # supplementary fields
    licq: bool = True
    positives: int = 0
    near_zero: int = 0
    normal_residual: float = 0.0
    degenerate_edges: list = field(default_factory=list)
    stress_test_status: str = ""
    realizable_ambient: list = field(default_factory=list)
    realizable_pinned: list = field(default_factory=list)
    certified_singular_flexible: bool = False

    def to_dict(self) -> dict:
        def conv(x):
            if isinstance(x, np.ndarray):
                return x.tolist()
            if isinstance(x, (list, tuple)):
                return [conv(y) for y in x]
            if isinstance(x, np.generic):
                return x.item()
            return x

        return {k: conv(getattr(self, k)) for k in self.__dataclass_fields__}


def certify(
    fw: Framework,
    coords=None,
    degeneracy_tol: float = DEFAULT_DEGENERACY_TOL,
    rank_tol: float = DEFAULT_RANK_TOL,
    licq_tol: float = DEFAULT_LICQ_TOL,
) -> SingularityCertificate:
    """Collect the saddle and rigidity evidence at a configuration.

    ``coords`` defaults to the framework's own configuration. The free-edge
    length recorded in the framework is irrelevant; only the fixed edges
    and pins define the manifold.
    """
    if coords is not None:
        fw = fw.with_coords(coords)
    x = fw.config.coords
    cs = ConstraintSet.from_framework(fw)
    energy = FreeEdgeEnergy.from_framework(fw)
    frame = tangent_frame(cs, x, licq_tol)
    t = cs.tangent_dim

    eig, index, pos, zeros, degenerate = [], 0, 0, 0, True
    kkt, normal_res = float("nan"), float("nan")
    if frame.licq:
        g = energy.gradient(x)
        kkt = float(np.linalg.norm(frame.project(g)))
        eta = frame.multipliers(g)
        h = energy.hessian(x) - cs.hessian_contraction(eta)
        red = frame.tangent.T @ h @ frame.tangent
        eig = np.linalg.eigvalsh(0.5 * (red + red.T))
        p = frame.projector()
        hhat = p @ h @ p
        normal_res = float(np.max(np.abs(hhat @ frame.normal))) if frame.normal.size else 0.0
        radius = float(np.max(np.abs(eig))) if eig.size else 0.0
        band = degeneracy_tol * radius
        index = int(np.sum(eig < -band))
        pos = int(np.sum(eig > band))
        zeros = int(eig.size - index - pos)
        degenerate = zeros > 0 or radius == 0.0
        eig = eig.tolist()

    r = rigidity_matrix(fw)
    sv = np.linalg.svd(r, compute_uv=False)
    rank = numerical_rank(sv, rank_tol)
    flex = nontrivial_flex_basis(fw, rank_tol)
    stresses = self_stresses(fw, rank_tol)
    test = stress_test(fw, flex, stresses)

    certified = bool(frame.licq and not degenerate and 0 < index < t and rank < fw.m)
    return SingularityCertificate(
        kkt_residual=kkt,
        licq_margin=frame.licq_margin,
        tangent_dim=t,
        eigenvalues=eig,
        index=index,
        degenerate=degenerate,
        rigidity_rank=rank,
        nontrivial_flex_dim=flex.shape[1],
        self_stress_dim=len(stresses),
        realizable_directions=[a.tolist() for a in test.directions],
        licq=frame.licq,
        positives=pos,
        near_zero=zeros,
        normal_residual=normal_res,
        degenerate_edges=degenerate_edges(fw),
        stress_test_status=test.status,
        realizable_ambient=[u.tolist() for u in test.ambient],
        realizable_pinned=[None if u is None else u.tolist() for u in test.pinned],
        certified_singular_flexible=certified,
    )


def maxwell_count(fw: Framework) -> dict:
    """Counting data reported by the analyzer."""
    return {
        "n": fw.n,
        "m": fw.m,
        "d": fw.dim,
        "nd": fw.n_coords,
        "trivial": n_trivial(fw.dim),
        "under_constrained": fw.is_under_constrained,
        "generic_internal_dof": fw.n_coords - fw.m - n_trivial(fw.dim),
    }
