"""Pure numpy versions of the inner-loop kernels.

These are the reference implementations; the Cython module ``_kernels_c``
must agree with them to rounding error.
"""
import numpy as np


def rigidity_rows(coords, edges, dim):
    """Rows ``2(p_a - p_b)`` / ``2(p_b - p_a)`` of the squared-length Jacobian."""
    coords = np.asarray(coords, dtype=float)
    edges = np.asarray(edges, dtype=np.intp).reshape(-1, 2)
    m = edges.shape[0]
    n_coords = coords.shape[0]
    out = np.zeros((m, n_coords))
    if m == 0:
        return out
    p = coords.reshape(-1, dim)
    diff = 2.0 * (p[edges[:, 0]] - p[edges[:, 1]])
    rows = np.arange(m)[:, None]
    axes = np.arange(dim)[None, :]
    out[rows, edges[:, 0:1] * dim + axes] = diff
    out[rows, edges[:, 1:2] * dim + axes] = -diff
    return out


def squared_lengths(coords, edges, dim):
    coords = np.asarray(coords, dtype=float)
    edges = np.asarray(edges, dtype=np.intp).reshape(-1, 2)
    p = coords.reshape(-1, dim)
    diff = p[edges[:, 0]] - p[edges[:, 1]]
    return np.einsum("ij,ij->i", diff, diff)


def laplacian_hessian(edges, weights, n_vertices, dim):
    """Return ``sum_i w_i * H_i`` where ``H_i`` is the constant edge Hessian.

    This is ``2 * kron(L_w, I_d)`` with ``L_w`` the weighted graph Laplacian.
    """
    edges = np.asarray(edges, dtype=np.intp).reshape(-1, 2)
    weights = np.asarray(weights, dtype=float)
    lap = np.zeros((n_vertices, n_vertices))
    a, b = edges[:, 0], edges[:, 1]
    np.add.at(lap, (a, a), weights)
    np.add.at(lap, (b, b), weights)
    np.add.at(lap, (a, b), -weights)
    np.add.at(lap, (b, a), -weights)
    return 2.0 * np.kron(lap, np.eye(dim))


def stress_forms(basis, edges, stresses, dim):
    """Quadratic forms ``Q[k]_{ab} = sum_e w_ke * 2 <V_a(e), V_b(e)>``.

    ``V_a(e)`` is the difference of the endpoint blocks of column ``a`` of
    ``basis`` on edge ``e``; ``stresses`` has one row per self-stress.
    """
    basis = np.asarray(basis, dtype=float)
    edges = np.asarray(edges, dtype=np.intp).reshape(-1, 2)
    stresses = np.atleast_2d(np.asarray(stresses, dtype=float))
    s = basis.shape[1]
    blocks = basis.reshape(-1, dim, s)
    diff = blocks[edges[:, 0]] - blocks[edges[:, 1]]  # (m, dim, s)
    per_edge = 2.0 * np.einsum("eda,edb->eab", diff, diff)
    return np.einsum("ke,eab->kab", stresses, per_edge)
