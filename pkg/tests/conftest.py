import numpy as np
import pytest

from flexsaddle import _kernels_py, kernels
from flexsaddle.framework import Framework

try:
    from flexsaddle import _kernels_c
except ImportError:
    _kernels_c = None

KERNEL_NAMES = ("rigidity_rows", "squared_lengths", "laplacian_hessian", "stress_forms")


@pytest.fixture(params=["cython", "python"])
def backend(request, monkeypatch):
    """Run the requesting test once per kernel implementation."""
    impl = _kernels_c if request.param == "cython" else _kernels_py
    if impl is None:
        pytest.skip("compiled kernels not built")
    for name in KERNEL_NAMES:
        monkeypatch.setattr(kernels, name, getattr(impl, name))
    return request.param


def random_framework(rng, n=None, dim=None, pinned=False):
    """Connected random framework: a spanning path plus random chords."""
    dim = dim or int(rng.choice([2, 3]))
    n = n or int(rng.integers(dim + 1, 9))
    pts = rng.normal(size=(n, dim))
    edges = [(i, i + 1) for i in range(n - 1)]
    others = [(i, j) for i in range(n) for j in range(i + 2, n)]
    rng.shuffle(others)
    edges += [tuple(e) for e in others[: int(rng.integers(0, len(others) + 1))]]
    pins = None
    if pinned:
        # d(d+1)/2 pins: all of vertex 0, d-1 of vertex 1, ...
        pins = [(v, a) for v in range(dim) for a in range(dim - v)]
    return Framework.from_points(pts, edges, int(rng.integers(len(edges))), pins=pins)


def central_difference(f, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    f0 = np.asarray(f(x))
    out = np.zeros(f0.shape + x.shape)
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = h
        out[..., k] = (np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2 * h)
    return out


class LinearConstraints:
    """``A x = b`` with the duck-typed constraint-set interface."""

    def __init__(self, a, b=None):
        self.a = np.atleast_2d(np.asarray(a, dtype=float))
        self.b = np.zeros(self.a.shape[0]) if b is None else np.asarray(b, dtype=float)
        self.dim = 1

    @property
    def tangent_dim(self):
        return self.a.shape[1] - self.a.shape[0]

    def values(self, x):
        return self.a @ x - self.b

    def jacobian(self, x):
        return self.a

    def hessian_contraction(self, w):
        return np.zeros((self.a.shape[1],) * 2)


class QuadraticEnergy:
    """``E(x) = x^T N diag(c) N^T x`` for coordinates ``z = N^T x``."""

    def __init__(self, basis, coeffs):
        self.h = 2.0 * basis @ np.diag(coeffs) @ basis.T

    def value(self, x):
        return 0.5 * x @ self.h @ x

    def gradient(self, x):
        return self.h @ x

    def hessian(self, x=None):
        return self.h


def embedded_quadratic(coeffs, n_ambient, seed=0):
    """Quadratic with the given coefficients on the null space of random linear constraints."""
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n_ambient - len(coeffs), n_ambient))
    _, _, vt = np.linalg.svd(a)
    basis = vt[a.shape[0]:].T
    return LinearConstraints(a), QuadraticEnergy(basis, coeffs), basis
