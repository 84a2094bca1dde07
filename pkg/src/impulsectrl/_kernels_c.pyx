# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled numerical kernels (BLAS/LAPACK backed).

Semantics match ``impulsectrl._kernels_py`` exactly: same Pade order, same
scaling rule, same pairwise summation tree.  Only the inner loops move to C.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport ceil, cos, fabs, log2, sin
from libc.string cimport memcpy
from scipy.linalg.cython_blas cimport dgemm
from scipy.linalg.cython_lapack cimport dgesv

cnp.import_array()

BACKEND = "compiled"

cdef double _THETA13 = 5.371920351148152

cdef double[14] _B13
_B13[0] = 64764752532480000.0
_B13[1] = 32382376266240000.0
_B13[2] = 7771770303897600.0
_B13[3] = 1187353796428800.0
_B13[4] = 129060195264000.0
_B13[5] = 10559470521600.0
_B13[6] = 670442572800.0
_B13[7] = 33522128640.0
_B13[8] = 1323241920.0
_B13[9] = 40840800.0
_B13[10] = 960960.0
_B13[11] = 16380.0
_B13[12] = 182.0
_B13[13] = 1.0


cdef void _sq_gemm(int n, double* a, double* b, double* c) noexcept nogil:
    # c = a @ b for square column-major matrices
    cdef char trans = b'N'
    cdef double one = 1.0
    cdef double zero = 0.0
    dgemm(&trans, &trans, &n, &n, &n, &one, a, &n, b, &n, &zero, c, &n)


cdef double _norm1(int n, double* a) noexcept nogil:
    cdef double best = 0.0
    cdef double col
    cdef int i, j
    for j in range(n):
        col = 0.0
        for i in range(n):
            col += fabs(a[j * n + i])
        if col > best:
            best = col
    return best


cdef int _expm_core(int n, double* a, double* a2, double* a4, double* a6,
                    double* w, double* z, double* u, int* ipiv) noexcept nogil:
    """expm of the column-major matrix ``a`` (clobbered); result in ``u``."""
    cdef int nn = n * n
    cdef int i, k, s, info
    cdef double norm, d, e, scale

    norm = _norm1(n, a)
    s = 0
    if norm > _THETA13:
        s = <int>ceil(log2(norm / _THETA13))
        scale = 2.0 ** (-s)
        for i in range(nn):
            a[i] *= scale

    _sq_gemm(n, a, a, a2)
    _sq_gemm(n, a2, a2, a4)
    _sq_gemm(n, a2, a4, a6)

    # odd part: u = a @ (a6 @ (b13 a6 + b11 a4 + b9 a2) + b7 a6 + b5 a4 + b3 a2 + b1 I)
    for i in range(nn):
        w[i] = _B13[13] * a6[i] + _B13[11] * a4[i] + _B13[9] * a2[i]
    _sq_gemm(n, a6, w, z)
    for i in range(nn):
        z[i] += _B13[7] * a6[i] + _B13[5] * a4[i] + _B13[3] * a2[i]
    for i in range(n):
        z[i * n + i] += _B13[1]
    _sq_gemm(n, a, z, u)

    # even part: z = a6 @ (b12 a6 + b10 a4 + b8 a2) + b6 a6 + b4 a4 + b2 a2 + b0 I
    for i in range(nn):
        w[i] = _B13[12] * a6[i] + _B13[10] * a4[i] + _B13[8] * a2[i]
    _sq_gemm(n, a6, w, z)
    for i in range(nn):
        z[i] += _B13[6] * a6[i] + _B13[4] * a4[i] + _B13[2] * a2[i]
    for i in range(n):
        z[i * n + i] += _B13[0]

    # solve (V - U) r = (V + U); LAPACK overwrites z with factors, u with r
    for i in range(nn):
        d = z[i]
        e = u[i]
        z[i] = d - e
        u[i] = d + e
    dgesv(&n, &n, z, &n, ipiv, u, &n, &info)
    if info != 0:
        return info

    for k in range(s):
        _sq_gemm(n, u, u, w)
        memcpy(u, w, nn * sizeof(double))
    return 0


cdef int _expm_buffers(int n, double[::1] a, double[::1] a2, double[::1] a4,
                       double[::1] a6, double[::1] w, double[::1] z,
                       double[::1] u, int[::1] ipiv) noexcept nogil:
    return _expm_core(n, &a[0], &a2[0], &a4[0], &a6[0], &w[0], &z[0], &u[0], &ipiv[0])


def pade_expm(a):
    """Matrix exponential by scaling-and-squaring with a [13/13] Pade approximant."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix exponential of a non-finite matrix")
    cdef int n = a.shape[0]
    if n == 0:
        return np.zeros((0, 0))

    # column-major flattening: Fortran ravel of the input
    cdef cnp.ndarray[double, ndim=1] buf = np.asfortranarray(a).ravel(order="F").copy()
    scratch = [np.empty(n * n) for _ in range(6)]
    cdef cnp.ndarray[double, ndim=1] a2 = scratch[0]
    cdef cnp.ndarray[double, ndim=1] a4 = scratch[1]
    cdef cnp.ndarray[double, ndim=1] a6 = scratch[2]
    cdef cnp.ndarray[double, ndim=1] w = scratch[3]
    cdef cnp.ndarray[double, ndim=1] z = scratch[4]
    cdef cnp.ndarray[double, ndim=1] u = scratch[5]
    cdef cnp.ndarray[int, ndim=1] ipiv = np.empty(n, dtype=np.intc)

    cdef int info = _expm_buffers(n, buf, a2, a4, a6, w, z, u, ipiv)
    if info != 0:
        raise RuntimeError(f"Pade solve failed (LAPACK info={info})")
    return u.reshape((n, n), order="F").copy()


def dense_propagate(a, ts, x):
    """Stack ``out[j] = expm(ts[j] * a) @ x`` (see the pure-numpy twin)."""
    a = np.asarray(a, dtype=np.float64)
    ts_arr = np.require(ts, np.float64, ("C", "W"))
    x = np.asarray(x, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(ts_arr))):
        raise ValueError("non-finite generator or time values")

    cdef bint vec = x.ndim == 1
    xmat = np.require(x[:, None] if vec else x, np.float64, ("F", "W"))
    cdef int n = a.shape[0]
    cdef int k = xmat.shape[1]
    cdef int nt = ts_arr.shape[0]

    cdef cnp.ndarray[double, ndim=1] aflat = np.asfortranarray(a).ravel(order="F").copy()
    scratch = [np.empty(n * n) for _ in range(7)]
    cdef cnp.ndarray[double, ndim=1] buf = scratch[0]
    cdef cnp.ndarray[double, ndim=1] a2 = scratch[1]
    cdef cnp.ndarray[double, ndim=1] a4 = scratch[2]
    cdef cnp.ndarray[double, ndim=1] a6 = scratch[3]
    cdef cnp.ndarray[double, ndim=1] w = scratch[4]
    cdef cnp.ndarray[double, ndim=1] z = scratch[5]
    cdef cnp.ndarray[double, ndim=1] u = scratch[6]
    cdef cnp.ndarray[int, ndim=1] ipiv = np.empty(n, dtype=np.intc)
    cdef cnp.ndarray[double, ndim=2] xf = xmat
    cdef cnp.ndarray[double, ndim=1] yf = np.empty(n * k)

    out = np.empty((nt, n, k))
    cdef double[:, :, ::1] outv = out
    cdef double[::1] ts_v = ts_arr
    cdef double[::1] bufv = buf
    cdef double[::1] av = aflat
    cdef double[::1] yv = yf
    cdef double[::1, :] xv = xf

    cdef int i, j, r, c, info, nn = n * n
    cdef char trans = b'N'
    cdef double one = 1.0, zero = 0.0
    for j in range(nt):
        for i in range(nn):
            bufv[i] = ts_v[j] * av[i]
        info = _expm_buffers(n, buf, a2, a4, a6, w, z, u, ipiv)
        if info != 0:
            raise RuntimeError(f"Pade solve failed (LAPACK info={info})")
        dgemm(&trans, &trans, &n, &k, &n, &one, <double*>u.data, &n,
              &xv[0, 0], &n, &zero, &yv[0], &n)
        for c in range(k):
            for r in range(n):
                outv[j, r, c] = yv[c * n + r]
    return out[:, :, 0] if vec else out


def rotation_propagate(freqs, ts, x):
    """Block-rotation semigroup applied at many times (see the pure twin)."""
    cdef cnp.ndarray[double, ndim=1] f = np.require(freqs, np.float64, ("C", "W"))
    cdef cnp.ndarray[double, ndim=1] t = np.require(ts, np.float64, ("C", "W"))
    x = np.asarray(x, dtype=np.float64)
    cdef bint vec = x.ndim == 1
    cdef cnp.ndarray[double, ndim=2] xm = np.require(x[:, None] if vec else x, np.float64, ("C", "W"))
    cdef int m = f.shape[0]
    cdef int nt = t.shape[0]
    cdef int k = xm.shape[1]
    if xm.shape[0] != 2 * m:
        raise ValueError(f"state length {xm.shape[0]} does not match {m} blocks")

    out = np.empty((nt, 2 * m, k))
    cdef double[:, :, ::1] outv = out
    cdef double[:, ::1] xv = xm
    cdef double[::1] fv = f
    cdef double[::1] tv = t
    cdef int i, j, c
    cdef double ang, cs, sn
    with nogil:
        for j in range(nt):
            for i in range(m):
                ang = tv[j] * fv[i]
                cs = cos(ang)
                sn = sin(ang)
                for c in range(k):
                    outv[j, 2 * i, c] = cs * xv[2 * i, c] + sn * xv[2 * i + 1, c]
                    outv[j, 2 * i + 1, c] = -sn * xv[2 * i, c] + cs * xv[2 * i + 1, c]
    return out[:, :, 0] if vec else out


def weighted_outer_accumulate(e, w):
    """``sum_j w[j] * e[j] @ e[j].T`` with the fixed pairwise tree."""
    cdef cnp.ndarray[double, ndim=3] ea = np.require(e, np.float64, ("C", "W"))
    cdef cnp.ndarray[double, ndim=1] wa = np.require(w, np.float64, ("C", "W"))
    cdef int nt = ea.shape[0]
    cdef int n = ea.shape[1]
    cdef int m = ea.shape[2]
    if nt == 0:
        return np.zeros((n, n))

    terms = np.empty((nt, n, n))
    cdef double[:, :, ::1] tv = terms
    cdef double[:, :, ::1] ev = ea
    cdef double[::1] wv = wa
    cdef int j, r, c, l, half, count
    cdef double acc
    with nogil:
        for j in range(nt):
            for r in range(n):
                for c in range(n):
                    acc = 0.0
                    for l in range(m):
                        acc += ev[j, r, l] * ev[j, c, l]
                    tv[j, r, c] = wv[j] * acc
        count = nt
        while count > 1:
            half = count // 2
            for j in range(half):
                for r in range(n):
                    for c in range(n):
                        tv[j, r, c] = tv[2 * j, r, c] + tv[2 * j + 1, r, c]
            if count % 2:
                for r in range(n):
                    for c in range(n):
                        tv[half, r, c] = tv[count - 1, r, c]
                count = half + 1
            else:
                count = half
    return np.array(terms[0])
