"""Choi-state representation of channels and the tools built on it.

Conventions, fixed once for the whole package:

* a channel's Choi matrix is the *state* (1 (x) Lambda)|Phi+><Phi+|, so it has
  trace 1; fidelities therefore carry an explicit d_in factor,
* the reference (input) factor is stored first, and the partial transpose
  used by the PPT test always acts on the reference factor,
* prepared states in measure-and-prepare channels are pure: the fidelity
  functional is linear in the prepared state, so mixed preparations never
  beat the best pure one.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from math import factorial
from itertools import permutations

import numpy as np

from . import serialize
from .ensembles import Ensemble, EnsembleFormatError, fidelity_operator
from .qmath import (hermitian, kron, max_entangled, partial_trace,
                    partial_transpose, perm_operator, proj)

PSD_TOL = 1e-9
TRACE_TOL = 1e-9
TP_TOL = 1e-8
PPT_TOL = 1e-9


def _check_choi(mat: np.ndarray, d_in: int, d_out: int) -> np.ndarray:
    st = hermitian(mat, tol=1e-8)
    if st.shape != (d_in * d_out, d_in * d_out):
        raise ValueError(f"Choi matrix shape {st.shape} does not match {d_in}x{d_out}")
    if np.linalg.eigvalsh(st)[0] < -PSD_TOL:
        raise ValueError("Choi matrix is not PSD within tolerance")
    if abs(np.trace(st).real - 1.0) > TRACE_TOL:
        raise ValueError(f"Choi matrix trace {np.trace(st).real!r} differs from 1")
    marg = partial_trace(st, (d_in, d_out), keep=[0])
    if np.max(np.abs(marg - np.eye(d_in) / d_in)) > TP_TOL:
        raise ValueError("channel is not trace-preserving: reference marginal != I/d_in")
    return st


@dataclass(frozen=True)
class ChoiMatrix:
    """Normalised Choi state of a d_in -> d_out channel (reference factor first)."""

    d_in: int
    d_out: int
    state: np.ndarray

    def __post_init__(self):
        st = _check_choi(self.state, self.d_in, self.d_out)
        st.setflags(write=False)
        object.__setattr__(self, "state", st)

    @property
    def dims(self) -> tuple[int, int]:
        return (self.d_in, self.d_out)


@dataclass(frozen=True)
class MultiCloneChoi:
    """Normalised Choi state of a d_in -> d_clone^n map; output = all clone factors."""

    d_in: int
    d_clone: int
    n_clones: int
    state: np.ndarray

    def __post_init__(self):
        st = _check_choi(self.state, self.d_in, self.d_clone**self.n_clones)
        st.setflags(write=False)
        object.__setattr__(self, "state", st)

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.d_in,) + (self.d_clone,) * self.n_clones


def identity_choi(d: int) -> ChoiMatrix:
    return ChoiMatrix(d, d, proj(max_entangled(d)))


def depolarizing_choi(d: int) -> ChoiMatrix:
    return ChoiMatrix(d, d, np.eye(d * d, dtype=complex) / (d * d))


def choi_from_measure_prepare(strategy, d_in: int, d_out: int) -> ChoiMatrix:
    """Choi state of the measure-and-prepare channel rho -> sum_j tr(M_j rho) phi_j phi_j^dag.

    Equals sum_j M_j^T/d_in (x) phi_j phi_j^dag; separable by construction.
    """
    if strategy.povm[0].shape != (d_in, d_in):
        raise ValueError("POVM dimension does not match d_in")
    if len(strategy.guesses[0]) != d_out:
        raise ValueError("guess dimension does not match d_out")
    st = np.zeros((d_in * d_out, d_in * d_out), dtype=complex)
    for m, phi in zip(strategy.povm, strategy.guesses):
        st += np.kron(m.T / d_in, proj(phi))
    return ChoiMatrix(d_in, d_out, st)


def channel_fidelity(j, e: Ensemble) -> float:
    """Ensemble-averaged fidelity sum_i p_i <t_i| L(s_i s_i^dag) |t_i> = d_in tr(O J)."""
    if isinstance(j, MultiCloneChoi):
        return average_clone_fidelity(j, e)
    if j.d_in != e.d_in or j.d_out != e.d_target:
        raise ValueError(f"channel dims {j.dims} do not match ensemble ({e.d_in}, {e.d_target})")
    om = fidelity_operator(e)
    return float(e.d_in * np.real(np.trace(om @ j.state)))


def apply_channel(j: ChoiMatrix, rho: np.ndarray) -> np.ndarray:
    """Act on a density operator: L(rho) = d_in tr_ref((rho^T (x) 1) J)."""
    rho = hermitian(rho)
    if rho.shape != (j.d_in, j.d_in):
        raise ValueError(f"input dimension {rho.shape[0]} does not match d_in={j.d_in}")
    big = np.kron(rho.T, np.eye(j.d_out)) @ j.state
    out = j.d_in * partial_trace(big, (j.d_in, j.d_out), keep=[1])
    return 0.5 * (out + out.conj().T)


def _pt_reference(j) -> np.ndarray:
    if isinstance(j, MultiCloneChoi):
        return partial_transpose(j.state, (j.d_in, j.d_clone**j.n_clones), 0)
    return partial_transpose(j.state, (j.d_in, j.d_out), 0)


def is_ppt(j, tol: float = PPT_TOL) -> bool:
    """PPT across the reference|output cut: necessary for an EB channel,
    and sufficient exactly when d_in * d_out <= 6."""
    return bool(np.linalg.eigvalsh(_pt_reference(j))[0] >= -tol)


def negativity(j) -> float:
    """Summed magnitude of the negative partial-transpose eigenvalues."""
    w = np.linalg.eigvalsh(_pt_reference(j))
    return float(np.sum(np.abs(w[w < 0])))


def marginal_choi(jn: MultiCloneChoi, k: int) -> ChoiMatrix:
    """Effective single-clone channel: trace out every clone but `k`."""
    if not 0 <= k < jn.n_clones:
        raise IndexError(f"clone index {k} out of range for {jn.n_clones} clones")
    st = partial_trace(jn.state, jn.dims, keep=[0, 1 + k])
    return ChoiMatrix(jn.d_in, jn.d_clone, st)


def symmetrize(jn: MultiCloneChoi) -> MultiCloneChoi:
    """Average over all permutations of the clone factors.

    The per-clone average fidelity is unchanged; afterwards every clone
    marginal is the same channel.  Guarded to n <= 6 (factorial blow-up).
    """
    n = jn.n_clones
    if n > 6:
        raise ValueError(f"symmetrize supports at most 6 clones, got {n}")
    if n == 1:
        return jn
    acc = np.zeros_like(jn.state)
    eye_ref = np.eye(jn.d_in)
    for perm in permutations(range(n)):
        p = kron(eye_ref, perm_operator(jn.d_clone, n, perm))
        acc += p @ jn.state @ p.T
    acc /= factorial(n)
    return MultiCloneChoi(jn.d_in, jn.d_clone, n, acc)


def average_clone_fidelity(jn: MultiCloneChoi, e: Ensemble) -> float:
    """Mean of the single-clone channel fidelities over all clones."""
    if jn.d_in != e.d_in or jn.d_clone != e.d_target:
        raise ValueError("multi-clone Choi dims do not match the ensemble")
    vals = [channel_fidelity(marginal_choi(jn, k), e) for k in range(jn.n_clones)]
    return float(np.mean(vals))


def _encode_matrix(a: np.ndarray) -> list:
    return [[serialize.complex_pair(z) for z in row] for row in a]


def _decode_matrix(rows, d: int) -> np.ndarray:
    try:
        a = np.array([[complex(float(re), float(im)) for re, im in row] for row in rows])
    except (TypeError, ValueError) as exc:
        raise EnsembleFormatError("'matrix' is not a nested list of [re, im] pairs") from exc
    if a.shape != (d, d):
        raise EnsembleFormatError(f"matrix shape {a.shape} does not match declared dims {d}x{d}")
    return a


def save_choi(j, path) -> None:
    if isinstance(j, MultiCloneChoi):
        doc = {"d_in": j.d_in, "d_clone": j.d_clone, "n_clones": j.n_clones,
               "matrix": _encode_matrix(j.state)}
    else:
        doc = {"d_in": j.d_in, "d_out": j.d_out, "matrix": _encode_matrix(j.state)}
    serialize.dump_json(doc, path)


def load_choi(path):
    """Load a ChoiMatrix or MultiCloneChoi from its JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise EnsembleFormatError(f"not valid JSON: {exc}") from exc
    if "d_in" not in data or "matrix" not in data:
        raise EnsembleFormatError("missing required key 'd_in' or 'matrix'")
    d_in = int(data["d_in"])
    if "n_clones" in data:
        d_c, n = int(data["d_clone"]), int(data["n_clones"])
        mat = _decode_matrix(data["matrix"], d_in * d_c**n)
        return MultiCloneChoi(d_in, d_c, n, mat)
    if "d_out" not in data:
        raise EnsembleFormatError("need 'd_out' (or 'd_clone' plus 'n_clones')")
    d_out = int(data["d_out"])
    mat = _decode_matrix(data["matrix"], d_in * d_out)
    return ChoiMatrix(d_in, d_out, mat)
