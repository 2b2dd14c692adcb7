import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flexsaddle import _kernels_py, kernels

_kernels_c = pytest.importorskip("flexsaddle._kernels_c")


def _case(seed):
    rng = np.random.default_rng(seed)
    dim = int(rng.integers(1, 4))
    n = int(rng.integers(2, 10))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    rng.shuffle(pairs)
    edges = np.array(pairs[: int(rng.integers(1, len(pairs) + 1))], dtype=np.intp)
    return rng, dim, n, rng.normal(size=n * dim), edges


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_backends_agree(seed):
    rng, dim, n, x, edges = _case(seed)
    for name, args in [
        ("rigidity_rows", (x, edges, dim)),
        ("squared_lengths", (x, edges, dim)),
        ("laplacian_hessian", (edges, rng.normal(size=len(edges)), n, dim)),
        ("stress_forms", (rng.normal(size=(n * dim, 3)), edges, rng.normal(size=(2, len(edges))), dim)),
    ]:
        np.testing.assert_allclose(
            getattr(_kernels_c, name)(*args), getattr(_kernels_py, name)(*args), rtol=1e-13, atol=1e-13, err_msg=name
        )


def test_laplacian_hessian_is_kron_of_graph_laplacian():
    edges = np.array([(0, 1), (1, 2), (0, 2), (2, 3)])
    w = np.array([1.0, -2.0, 0.5, 3.0])
    lap = np.zeros((4, 4))
    for (a, b), wi in zip(edges, w):
        lap[a, a] += wi
        lap[b, b] += wi
        lap[a, b] -= wi
        lap[b, a] -= wi
    for impl in (_kernels_c, _kernels_py):
        np.testing.assert_allclose(impl.laplacian_hessian(edges, w, 4, 2), 2 * np.kron(lap, np.eye(2)))


def test_empty_edge_list():
    x = np.arange(6.0)
    edges = np.zeros((0, 2), dtype=np.intp)
    for impl in (_kernels_c, _kernels_py):
        assert impl.rigidity_rows(x, edges, 2).shape == (0, 6)
        assert impl.squared_lengths(x, edges, 2).shape == (0,)


def test_backend_selection_respects_env():
    import subprocess
    import sys

    code = "from flexsaddle import kernels; print(kernels.BACKEND)"
    forced = subprocess.run([sys.executable, "-c", code], env={"FLEXSADDLE_PURE_PYTHON": "1", "PATH": ""},
                            capture_output=True, text=True, check=True)
    assert forced.stdout.strip() == "python"
    assert kernels.BACKEND == "cython"
