"""Weighted pure-state ensembles: built-ins, multi-copy lifting, file I/O.

An ensemble pairs each drawn input state with the target state a device is
judged against.  Unlifted ensembles have input == target; lifting to L copies
replaces each input by its L-fold Kronecker power while the target stays a
single copy, so everything downstream works unchanged on both.

The built-in finite sets stand in exactly for the familiar continuous
ensembles: the tetrahedron is a qubit 2-design (enough for any objective
quadratic in the density matrix), the octahedron a 3-design, and equator:M
with M >= 3 averages all harmonics up to order 2 on the equator.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from math import cos, pi, sin, sqrt

import numpy as np

from . import serialize
from .qmath import DIM_CAP, DimensionCapError, kron_power, proj, state

WEIGHT_TOL = 1e-12
FILE_TOL = 1e-9

BUILTIN_NAMES = ("orthogonal", "pair", "bb84", "tetra", "octa", "equator")


class EnsembleFormatError(ValueError):
    """Malformed ensemble file or inconsistent ensemble data."""


@dataclass(frozen=True)
class Ensemble:
    """Weighted list of (input, target) pure-state pairs."""

    d_in: int
    d_target: int
    weights: np.ndarray
    inputs: np.ndarray   # shape (n, d_in)
    targets: np.ndarray  # shape (n, d_target)
    label: str = ""

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        inp = np.asarray(self.inputs, dtype=complex)
        tgt = np.asarray(self.targets, dtype=complex)
        if w.ndim != 1 or len(w) == 0:
            raise EnsembleFormatError("ensemble needs at least one state")
        if inp.shape != (len(w), self.d_in) or tgt.shape != (len(w), self.d_target):
            raise EnsembleFormatError("state array shapes do not match declared dimensions")
        if np.any(w <= 0):
            raise EnsembleFormatError("all weights must be positive")
        if abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise EnsembleFormatError(f"weights sum to {w.sum()!r}, expected 1")
        inp = np.array([state(v) for v in inp])
        tgt = np.array([state(v) for v in tgt])
        for a in (w, inp, tgt):
            a.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "inputs", inp)
        object.__setattr__(self, "targets", tgt)

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def is_unlifted(self) -> bool:
        return self.d_in == self.d_target and np.array_equal(self.inputs, self.targets)


def _bloch(x: float, y: float, z: float) -> np.ndarray:
    theta = np.arccos(np.clip(z, -1.0, 1.0))
    phi = np.arctan2(y, x)
    return np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])


def make_builtin(name: str, **params) -> Ensemble:
    """Construct a built-in qubit ensemble by name.

    orthogonal        {|0>, |1>}
    pair (c)          two real states with overlap c in [0, 1)
    bb84              the four BB84 states
    tetra             tetrahedron vertices on the Bloch sphere (2-design)
    octa              the six Pauli eigenstates (3-design)
    equator (M >= 3)  (|0> + e^{2 pi i k/M} |1>)/sqrt2, k = 0..M-1
    """
    if name == "orthogonal":
        vecs = [np.array([1, 0], complex), np.array([0, 1], complex)]
        label = "orthogonal"
    elif name == "pair":
        c = float(params.get("c", params.get("overlap", -1.0)))
        if not 0.0 <= c < 1.0:
            raise ValueError(f"pair overlap must lie in [0, 1), got {c}")
        a = np.arccos(c) / 2
        vecs = [np.array([cos(a), sin(a)], complex), np.array([cos(a), -sin(a)], complex)]
        label = f"pair:{serialize.fmt_real(c)}"
    elif name == "bb84":
        s = 1 / sqrt(2)
        vecs = [np.array([1, 0], complex), np.array([0, 1], complex),
                np.array([s, s], complex), np.array([s, -s], complex)]
        label = "bb84"
    elif name == "tetra":
        r = 2 * sqrt(2) / 3
        vecs = [_bloch(0, 0, 1.0),
                _bloch(r, 0, -1 / 3),
                _bloch(-sqrt(2) / 3, sqrt(2 / 3), -1 / 3),
                _bloch(-sqrt(2) / 3, -sqrt(2 / 3), -1 / 3)]
        label = "tetra"
    elif name == "octa":
        s = 1 / sqrt(2)
        vecs = [np.array([1, 0], complex), np.array([0, 1], complex),
                np.array([s, s], complex), np.array([s, -s], complex),
                np.array([s, 1j * s], complex), np.array([s, -1j * s], complex)]
        label = "octa"
    elif name == "equator":
        m = int(params.get("M", params.get("m", 0)))
        if m < 3:
            raise ValueError(f"equator needs M >= 3, got {m}")
        s = 1 / sqrt(2)
        vecs = [np.array([s, s * np.exp(2j * pi * k / m)]) for k in range(m)]
        label = f"equator:{m}"
    else:
        raise ValueError(f"unknown builtin ensemble {name!r}")
    n = len(vecs)
    arr = np.array([state(v) for v in vecs])
    return Ensemble(d_in=2, d_target=2, weights=np.full(n, 1.0 / n),
                    inputs=arr, targets=arr, label=label)


def lift_copies(e: Ensemble, copies: int) -> Ensemble:
    """Replace each input by its `copies`-fold Kronecker power (targets unchanged)."""
    if not e.is_unlifted:
        raise ValueError("ensemble is already lifted")
    if copies < 1:
        raise ValueError(f"copies must be >= 1, got {copies}")
    d_in = e.d_target**copies
    if d_in > DIM_CAP:
        raise DimensionCapError(f"lifted input dimension {d_in} exceeds cap {DIM_CAP}")
    if copies == 1:
        return e
    inputs = np.array([kron_power(t, copies) for t in e.targets])
    return Ensemble(d_in=d_in, d_target=e.d_target, weights=e.weights.copy(),
                    inputs=inputs, targets=e.targets.copy(),
                    label=f"{e.label}^x{copies}" if e.label else f"lifted:{copies}")


def fidelity_operator(e: Ensemble) -> np.ndarray:
    """PSD unit-trace operator O on input (x) target with fidelity = d_in tr(O J).

    O = sum_i p_i conj(input_i) conj(input_i)^dag (x) target_i target_i^dag;
    the conjugate on the reference side matches the Choi convention of the
    channels module.
    """
    d = e.d_in * e.d_target
    om = np.zeros((d, d), dtype=complex)
    for p, s, t in zip(e.weights, e.inputs, e.targets):
        om += p * np.kron(proj(s.conj()), proj(t))
    return 0.5 * (om + om.conj().T)


def blind_guess_value(e: Ensemble) -> float:
    """Best fidelity of a fixed guess with no measurement: lambda_max(sum p_i t_i t_i^dag)."""
    avg = np.zeros((e.d_target, e.d_target), dtype=complex)
    for p, t in zip(e.weights, e.targets):
        avg += p * proj(t)
    return float(np.linalg.eigvalsh(avg)[-1])


def _decode_vec(entry, d: int, what: str) -> np.ndarray:
    try:
        v = np.array([complex(float(re), float(im)) for re, im in entry])
    except (TypeError, ValueError) as exc:
        raise EnsembleFormatError(f"{what} is not a list of [re, im] pairs") from exc
    if v.shape != (d,):
        raise EnsembleFormatError(f"{what} has {v.shape[0]} amplitudes, expected {d}")
    nrm = float(np.linalg.norm(v))
    if abs(nrm - 1.0) > FILE_TOL:
        raise EnsembleFormatError(f"{what} has norm {nrm!r}, outside tolerance {FILE_TOL}")
    if abs(nrm - 1.0) > WEIGHT_TOL:
        v = v / nrm  # renormalise only when needed, keeping round-trips bit-exact
    return state(v)


def _encode_vec(v: np.ndarray) -> list:
    return [serialize.complex_pair(z) for z in v]


def load_ensemble(path) -> Ensemble:
    """Load an ensemble from the JSON schema written by save_ensemble."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise EnsembleFormatError(f"not valid JSON: {exc}") from exc
    for key in ("d_in", "d_target", "states"):
        if key not in data:
            raise EnsembleFormatError(f"missing required key {key!r}")
    d_in, d_t = int(data["d_in"]), int(data["d_target"])
    label = str(data.get("label", ""))
    weights, inputs, targets = [], [], []
    if not isinstance(data["states"], list) or not data["states"]:
        raise EnsembleFormatError("'states' must be a non-empty list")
    for k, item in enumerate(data["states"]):
        if "p" not in item or "target" not in item:
            raise EnsembleFormatError(f"state {k}: missing 'p' or 'target'")
        p = float(item["p"])
        if p <= 0:
            raise EnsembleFormatError(f"state {k}: weight {p!r} is not positive")
        tgt = _decode_vec(item["target"], d_t, f"state {k} target")
        if "input" in item:
            inp = _decode_vec(item["input"], d_in, f"state {k} input")
        else:
            if d_in != d_t:
                raise EnsembleFormatError(f"state {k}: 'input' required when d_in != d_target")
            inp = tgt
        weights.append(p)
        inputs.append(inp)
        targets.append(tgt)
    w = np.array(weights)
    if abs(w.sum() - 1.0) > FILE_TOL:
        raise EnsembleFormatError(f"weights sum to {w.sum()!r}, outside tolerance {FILE_TOL}")
    if abs(w.sum() - 1.0) > WEIGHT_TOL:
        w = w / w.sum()
    return Ensemble(d_in=d_in, d_target=d_t, weights=w,
                    inputs=np.array(inputs), targets=np.array(targets), label=label)


def save_ensemble(e: Ensemble, path) -> None:
    states = []
    for p, s, t in zip(e.weights, e.inputs, e.targets):
        item: dict = {"p": float(p)}
        if not (len(s) == len(t) and np.array_equal(s, t)):
            item["input"] = _encode_vec(s)
        item["target"] = _encode_vec(t)
        states.append(item)
    doc = {"label": e.label, "d_in": e.d_in, "d_target": e.d_target, "states": states}
    serialize.dump_json(doc, path)
