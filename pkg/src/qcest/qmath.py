"""Dense complex linear algebra for small multipartite quantum systems.

Everything here works on plain numpy arrays: operators are square complex
matrices in row-major order, states are 1-d complex vectors.  The validating
constructors `hermitian` and `state` are the entry points for data coming
from files or from solvers; internal code that already knows its matrices
are Hermitian calls the raw routines directly.
"""

from __future__ import annotations

from itertools import combinations_with_replacement
from math import comb, factorial, sqrt

import numpy as np

# Largest operator dimension any routine will materialise.
DIM_CAP = 4096

HERM_TOL = 1e-12
NORM_TOL = 1e-12
PHASE_TOL = 1e-12


class DimensionCapError(ValueError):
    """A requested object would exceed the configured dimension cap."""


def hermitian(m: np.ndarray, tol: float = HERM_TOL) -> np.ndarray:
    """Validate that `m` is Hermitian (drift at most `tol`) and return (M + M†)/2.

    Raises ValueError on non-square input, non-finite entries, or drift
    above the tolerance.
    """
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    drift = float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0
    if drift > tol:
        raise ValueError(f"matrix is not Hermitian: drift {drift:.3e} > {tol:.1e}")
    return (a + a.conj().T) / 2


def state(v: np.ndarray, tol: float = NORM_TOL) -> np.ndarray:
    """Validate a pure-state vector and return it with canonical global phase.

    The vector must have unit Euclidean norm within `tol`.  The phase is fixed
    so that the first amplitude of modulus > 1e-12 is real and nonnegative,
    which makes file round-trips bit-stable.
    """
    a = np.asarray(v, dtype=complex).reshape(-1)
    if not np.all(np.isfinite(a)):
        raise ValueError("state vector has non-finite entries")
    nrm = float(np.linalg.norm(a))
    if abs(nrm - 1.0) > tol:
        raise ValueError(f"state vector norm {nrm!r} differs from 1 by more than {tol:.1e}")
    sig = np.flatnonzero(np.abs(a) > PHASE_TOL)
    if sig.size == 0:
        raise ValueError("state vector has no significant amplitude")
    k = int(sig[0])
    mod = abs(a[k])
    a = a * (a[k].conjugate() / mod)
    a[k] = mod
    return a


def layout(dim: int, factors) -> tuple[int, ...]:
    """Validate a tensor-factor layout against an operator dimension.

    Dimension-1 factors are stripped; every remaining factor must be >= 2 and
    their product must equal `dim`.
    """
    fs = tuple(int(f) for f in factors)
    if any(f < 1 for f in fs):
        raise ValueError(f"layout factors must be positive, got {fs}")
    fs = tuple(f for f in fs if f != 1)
    prod = 1
    for f in fs:
        prod *= f
    if prod != dim:
        raise ValueError(f"layout {fs} has product {prod}, operator dimension is {dim}")
    return fs


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product."""
    return np.kron(a, b)


def kron_all(mats) -> np.ndarray:
    out = np.asarray(mats[0])
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def kron_power(a: np.ndarray, n: int) -> np.ndarray:
    out = np.asarray(a)
    for _ in range(n - 1):
        out = np.kron(out, a)
    return out


def ket(i: int, d: int) -> np.ndarray:
    v = np.zeros(d, dtype=complex)
    v[i] = 1.0
    return v


def proj(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=complex).reshape(-1)
    return np.outer(v, v.conj())


def dagger(a: np.ndarray) -> np.ndarray:
    return np.asarray(a).conj().T


def partial_trace(x: np.ndarray, dims, keep) -> np.ndarray:
    """Trace out every tensor factor not listed in `keep`.

    `dims` is the factor layout of `x`; `keep` is an iterable of factor
    indices.  The kept factors retain their original relative order.
    """
    x = np.asarray(x, dtype=complex)
    dims = layout(x.shape[0], dims)
    n = len(dims)
    keep = sorted(set(int(k) for k in keep))
    if keep and (keep[0] < 0 or keep[-1] >= n):
        raise IndexError(f"keep indices {keep} out of range for {n} factors")
    t = x.reshape(dims + dims)
    left = list(range(n))
    for i in reversed([i for i in range(n) if i not in keep]):
        k = left.index(i)
        t = np.trace(t, axis1=k, axis2=k + len(left))
        left.remove(i)
    d_keep = 1
    for i in left:
        d_keep *= dims[i]
    return t.reshape(d_keep, d_keep)


def partial_transpose(x: np.ndarray, dims, sys: int) -> np.ndarray:
    """Transpose the tensor factor `sys`, leaving the others untouched."""
    x = np.asarray(x, dtype=complex)
    dims = layout(x.shape[0], dims)
    n = len(dims)
    if not 0 <= sys < n:
        raise IndexError(f"factor index {sys} out of range for {n} factors")
    t = x.reshape(dims + dims)
    t = np.swapaxes(t, sys, sys + n)
    return t.reshape(x.shape)


def max_entangled(d: int) -> np.ndarray:
    """|Phi+> = sum_i |ii>/sqrt(d) on C^d (x) C^d."""
    if d < 2:
        raise ValueError(f"local dimension must be >= 2, got {d}")
    v = np.zeros(d * d, dtype=complex)
    v[:: d + 1] = 1.0 / sqrt(d)
    return v


def eigh(h: np.ndarray, tol: float = HERM_TOL):
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending.

    Returns (values, vectors) with orthonormal eigenvector columns; LAPACK's
    deterministic ordering breaks ties stably.
    """
    a = hermitian(h, tol=tol)
    return np.linalg.eigh(a)


def perm_operator(d: int, n: int, perm) -> np.ndarray:
    """Unitary that sends tensor factor k to slot perm[k] on (C^d)^(x)n.

    Satisfies P_pi P_sigma = P_{pi o sigma} with (pi o sigma)(k) = pi(sigma(k)).
    """
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(n)):
        raise ValueError(f"{perm} is not a permutation of 0..{n - 1}")
    big = d**n
    if big > DIM_CAP:
        raise DimensionCapError(f"d^n = {big} exceeds cap {DIM_CAP}")
    digits = np.unravel_index(np.arange(big), (d,) * n)
    out_digits: list = [None] * n
    for k in range(n):
        out_digits[perm[k]] = digits[k]
    out = np.ravel_multi_index(tuple(out_digits), (d,) * n)
    p = np.zeros((big, big))
    p[out, np.arange(big)] = 1.0
    return p


def sym_dim(d: int, n: int) -> int:
    """Dimension of the symmetric subspace of (C^d)^(x)n."""
    return comb(n + d - 1, d - 1)


def sym_basis(d: int, n: int) -> list[tuple[int, ...]]:
    """Occupation-number basis labels as nondecreasing index tuples, lexicographic."""
    return list(combinations_with_replacement(range(d), n))


def sym_isometry(d: int, n: int) -> np.ndarray:
    """Isometry from the symmetric subspace of (C^d)^(x)n into the full space.

    Columns are the normalised symmetrisations of the nondecreasing index
    tuples in lexicographic order (for d=2, n=2: |00>, (|01>+|10>)/sqrt2,
    |11>), so V^dag V = I on the binom(n+d-1, d-1)-dimensional domain.
    """
    if d < 2 or n < 1:
        raise ValueError(f"need d >= 2 and n >= 1, got d={d}, n={n}")
    big = d**n
    if big > DIM_CAP:
        raise DimensionCapError(f"d^n = {big} exceeds cap {DIM_CAP}")
    tuples = sym_basis(d, n)
    col_of = {t: c for c, t in enumerate(tuples)}
    norms = np.empty(len(tuples))
    for c, t in enumerate(tuples):
        counts: dict[int, int] = {}
        for i in t:
            counts[i] = counts.get(i, 0) + 1
        mult = 1
        for v in counts.values():
            mult *= factorial(v)
        norms[c] = sqrt(mult / factorial(n))
    v = np.zeros((big, len(tuples)))
    digits = np.unravel_index(np.arange(big), (d,) * n)
    for i in range(big):
        t = tuple(sorted(dig[i] for dig in digits))
        c = col_of[t]
        v[i, c] = norms[c]
    return v
