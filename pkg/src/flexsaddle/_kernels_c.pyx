# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner-loop kernels; same contracts as ``_kernels_py``."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def rigidity_rows(coords, edges, Py_ssize_t dim):
    cdef const double[::1] p = np.ascontiguousarray(coords, dtype=np.float64)
    cdef const cnp.intp_t[:, ::1] e = np.ascontiguousarray(
        np.asarray(edges, dtype=np.intp).reshape(-1, 2))
    cdef Py_ssize_t m = e.shape[0]
    cdef Py_ssize_t i, k, a, b
    cdef double diff
    out = np.zeros((m, p.shape[0]))
    cdef double[:, ::1] r = out
    for i in range(m):
        a = e[i, 0] * dim
        b = e[i, 1] * dim
        for k in range(dim):
            diff = 2.0 * (p[a + k] - p[b + k])
            r[i, a + k] = diff
            r[i, b + k] = -diff
    return out


def squared_lengths(coords, edges, Py_ssize_t dim):
    cdef const double[::1] p = np.ascontiguousarray(coords, dtype=np.float64)
    cdef const cnp.intp_t[:, ::1] e = np.ascontiguousarray(
        np.asarray(edges, dtype=np.intp).reshape(-1, 2))
    cdef Py_ssize_t m = e.shape[0]
    cdef Py_ssize_t i, k, a, b
    cdef double diff, acc
    out = np.empty(m)
    cdef double[::1] o = out
    for i in range(m):
        a = e[i, 0] * dim
        b = e[i, 1] * dim
        acc = 0.0
        for k in range(dim):
            diff = p[a + k] - p[b + k]
            acc += diff * diff
        o[i] = acc
    return out


def laplacian_hessian(edges, weights, Py_ssize_t n_vertices, Py_ssize_t dim):
    cdef const cnp.intp_t[:, ::1] e = np.ascontiguousarray(
        np.asarray(edges, dtype=np.intp).reshape(-1, 2))
    cdef const double[::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t m = e.shape[0]
    cdef Py_ssize_t i, k, a, b
    cdef double c
    out = np.zeros((n_vertices * dim, n_vertices * dim))
    cdef double[:, ::1] h = out
    for i in range(m):
        a = e[i, 0] * dim
        b = e[i, 1] * dim
        c = 2.0 * w[i]
        for k in range(dim):
            h[a + k, a + k] += c
            h[b + k, b + k] += c
            h[a + k, b + k] -= c
            h[b + k, a + k] -= c
    return out


def stress_forms(basis, edges, stresses, Py_ssize_t dim):
    cdef const double[:, ::1] v = np.ascontiguousarray(basis, dtype=np.float64)
    cdef const cnp.intp_t[:, ::1] e = np.ascontiguousarray(
        np.asarray(edges, dtype=np.intp).reshape(-1, 2))
    cdef const double[:, ::1] w = np.ascontiguousarray(
        np.atleast_2d(np.asarray(stresses, dtype=np.float64)))
    cdef Py_ssize_t m = e.shape[0]
    cdef Py_ssize_t s = v.shape[1]
    cdef Py_ssize_t n_stress = w.shape[0]
    cdef Py_ssize_t i, k, a, b, c1, c2, q
    cdef double acc
    out = np.zeros((n_stress, s, s))
    cdef double[:, :, ::1] o = out
    for i in range(m):
        a = e[i, 0] * dim
        b = e[i, 1] * dim
        for c1 in range(s):
            for c2 in range(c1, s):
                acc = 0.0
                for k in range(dim):
                    acc += (v[a + k, c1] - v[b + k, c1]) * (v[a + k, c2] - v[b + k, c2])
                acc *= 2.0
                for q in range(n_stress):
                    o[q, c1, c2] += w[q, i] * acc
    for q in range(n_stress):
        for c1 in range(s):
            for c2 in range(c1 + 1, s):
                o[q, c2, c1] = o[q, c1, c2]
    return out
