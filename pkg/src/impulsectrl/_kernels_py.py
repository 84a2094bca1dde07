"""Pure-numpy reference implementation of the numerical kernels.

The compiled extension ``impulsectrl._kernels_c`` implements the same four
functions with identical semantics; ``impulsectrl._backend`` picks whichever
is available.  Everything here is deterministic: fixed Pade order, fixed
scaling rule, fixed pairwise summation tree.
"""

import numpy as np

BACKEND = "python"

# [13/13] Pade numerator coefficients for expm (Higham 2005).
_PADE13 = (
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
)
_THETA13 = 5.371920351148152


def pade_expm(a):
    """Matrix exponential by scaling-and-squaring with a [13/13] Pade approximant.

    Relative accuracy is at machine level for ``norm(a) <= 1e4`` after
    scaling, which covers every propagation horizon this package targets.

    Parameters
    ----------
    a : (n, n) array_like
        Real square matrix.

    Returns
    -------
    (n, n) ndarray
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix exponential of a non-finite matrix")
    n = a.shape[0]
    if n == 0:
        return np.zeros((0, 0))

    norm = np.linalg.norm(a, 1)
    squarings = 0
    if norm > _THETA13:
        squarings = int(np.ceil(np.log2(norm / _THETA13)))
        a = a / (2.0**squarings)

    b = _PADE13
    ident = np.eye(n)
    a2 = a @ a
    a4 = a2 @ a2
    a6 = a2 @ a4
    u = a @ (a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident)
    v = a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident
    r = np.linalg.solve(v - u, v + u)
    for _ in range(squarings):
        r = r @ r
    return r


def dense_propagate(a, ts, x):
    """Apply the matrix-exponential semigroup of ``a`` at many times.

    Returns the stack ``out[j] = expm(ts[j] * a) @ x``.

    Parameters
    ----------
    a : (n, n) array_like
    ts : (N,) array_like
    x : (n,) or (n, k) array_like

    Returns
    -------
    (N, n) or (N, n, k) ndarray
    """
    a = np.asarray(a, dtype=np.float64)
    ts = np.asarray(ts, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    out = np.empty((ts.shape[0],) + x.shape)
    for j, t in enumerate(ts):
        out[j] = pade_expm(t * a) @ x
    return out


def rotation_propagate(freqs, ts, x):
    """Apply the block-rotation semigroup (frequencies ``freqs``) at many times.

    The state pairs ``(x[2i], x[2i+1])`` rotate with angular speed
    ``freqs[i]``; the result stacks one state per entry of ``ts``.

    Parameters
    ----------
    freqs : (M,) array_like
    ts : (N,) array_like
    x : (2M,) or (2M, k) array_like

    Returns
    -------
    (N, 2M) or (N, 2M, k) ndarray
    """
    freqs = np.asarray(freqs, dtype=np.float64)
    ts = np.asarray(ts, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    vec = x.ndim == 1
    if vec:
        x = x[:, None]
    angles = ts[:, None] * freqs[None, :]  # (N, M)
    c = np.cos(angles)[:, :, None]
    s = np.sin(angles)[:, :, None]
    x1 = x[0::2][None, :, :]
    x2 = x[1::2][None, :, :]
    out = np.empty((ts.shape[0],) + x.shape)
    out[:, 0::2, :] = c * x1 + s * x2
    out[:, 1::2, :] = -s * x1 + c * x2
    return out[:, :, 0] if vec else out


def weighted_outer_accumulate(e, w):
    """Accumulate ``sum_j w[j] * e[j] @ e[j].T`` with a fixed pairwise tree.

    The reduction pairs adjacent node indices ((0,1), (2,3), ...) level by
    level, so the summation order is independent of threading or chunking
    decisions made by callers.

    Parameters
    ----------
    e : (N, n, m) array_like
    w : (N,) array_like

    Returns
    -------
    (n, n) ndarray
    """
    e = np.asarray(e, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if e.shape[0] == 0:
        return np.zeros((e.shape[1], e.shape[1]))
    terms = w[:, None, None] * (e @ e.transpose(0, 2, 1))
    while terms.shape[0] > 1:
        half = terms.shape[0] // 2
        paired = terms[0 : 2 * half : 2] + terms[1 : 2 * half : 2]
        if terms.shape[0] % 2:
            paired = np.concatenate([paired, terms[-1:]], axis=0)
        terms = paired
    return terms[0]
