# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled versions of the hot assembly loops (see _pykern.py for the contract)."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "cython"


def accumulate_far_pairs(double[:, ::1] A, double[::1] f,
                         double[:, :, ::1] cAA, double[:, :, ::1] cBB,
                         double[:, :, ::1] cX, double h2):
    cdef Py_ssize_t M = f.shape[0]
    cdef Py_ssize_t d, a, b, i, j
    cdef double w
    with nogil:
        for d in range(2, M):
            for a in range(M - d):
                b = a + d
                w = 2.0 * h2 * f[a] * f[b]
                for i in range(2):
                    for j in range(2):
                        A[a + i, a + j] += w * cAA[d, i, j]
                        A[b + i, b + j] += w * cBB[d, i, j]
                        A[a + i, b + j] -= w * cX[d, i, j]
                        A[b + j, a + i] -= w * cX[d, i, j]
    return np.asarray(A)


def far_pair_energy(double[:, ::1] U, double[:, ::1] V, double[::1] f,
                    double[:, :, ::1] g2, double h2):
    cdef Py_ssize_t M = U.shape[0]
    cdef Py_ssize_t G = U.shape[1]
    cdef Py_ssize_t d, a, b, q, p
    cdef double total = 0.0, acc, w
    with nogil:
        for d in range(2, M):
            for a in range(M - d):
                b = a + d
                acc = 0.0
                for q in range(G):
                    for p in range(G):
                        acc += g2[d, q, p] * (U[a, q] - U[b, p]) * (V[a, q] - V[b, p])
                total += 2.0 * h2 * f[a] * f[b] * acc
    return total


def far_pair_commutator(double[:, ::1] E, double[:, ::1] P, double[:, ::1] S,
                        double[::1] f, double[:, :, ::1] g2, double h2):
    cdef Py_ssize_t M = E.shape[0]
    cdef Py_ssize_t G = E.shape[1]
    cdef Py_ssize_t d, a, b, q, p
    cdef double total = 0.0, acc, w
    with nogil:
        for d in range(2, M):
            for a in range(M - d):
                b = a + d
                acc = 0.0
                for q in range(G):
                    for p in range(G):
                        acc += g2[d, q, p] * (E[a, q] - E[b, p]) \
                               * (P[b, p] * S[a, q] - P[a, q] * S[b, p])
                total += 2.0 * h2 * f[a] * f[b] * acc
    return total
