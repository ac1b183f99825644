"""Optimal estimation and cloning fidelities.

Two routes to every number:

* upper bounds / exact values from SDPs over Choi states -- either the full
  multi-clone map, or an N-extension of the effective single-clone Choi state
  with clone-permutation invariance (full-perm mode) or Bose symmetry of the
  clone factors (bose mode, variable compressed to the symmetric subspace),
* lower bounds from explicit measure-and-prepare strategies found by a
  seeded see-saw (POVM step by SDP, guess step by top eigenvector).

As the number of clones grows the extendibility constraint squeezes the
single-clone Choi state towards the separable set, so the cloning value
decreases monotonically onto the estimation value; `converge` tabulates
this, including the partial-transpose negativity of the optimal single-clone
marginal as the monogamy diagnostic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import sdp
from .channels import ChoiMatrix, MultiCloneChoi, negativity
from .ensembles import Ensemble, blind_guess_value, fidelity_operator
from .qmath import (DIM_CAP, DimensionCapError, hermitian, partial_trace,
                    perm_operator, proj, state, sym_basis, sym_dim)

POVM_TOL = 1e-10
POVM_SUM_TOL = 1e-9
SEESAW_STOP = 1e-9
SEESAW_MAX_ROUNDS = 500
MONOTONE_SLACK = 1e-7


@dataclass(frozen=True)
class EstimationStrategy:
    """POVM {M_j} on the input space plus a pure guess phi_j per outcome."""

    povm: tuple
    guesses: tuple

    def __post_init__(self):
        povm = tuple(hermitian(m, tol=1e-9) for m in self.povm)
        guesses = tuple(state(g) for g in self.guesses)
        if len(povm) != len(guesses):
            raise ValueError("POVM and guess counts differ")
        if not povm:
            raise ValueError("strategy needs at least one outcome")
        d = povm[0].shape[0]
        total = np.zeros((d, d), dtype=complex)
        for m in povm:
            if m.shape != (d, d):
                raise ValueError("POVM elements have mixed dimensions")
            if np.linalg.eigvalsh(m)[0] < -POVM_TOL:
                raise ValueError("POVM element is not PSD within tolerance")
            total += m
        if np.max(np.abs(total - np.eye(d))) > POVM_SUM_TOL:
            raise ValueError("POVM does not sum to the identity")
        object.__setattr__(self, "povm", povm)
        object.__setattr__(self, "guesses", guesses)

    @property
    def d_in(self) -> int:
        return self.povm[0].shape[0]

    @property
    def d_out(self) -> int:
        return len(self.guesses[0])


@dataclass(frozen=True)
class FidelityBounds:
    """Certified bracket on an optimal fidelity."""

    lower: float   # achieved by an explicit strategy
    upper: float   # SDP relaxation value
    upper_exact: bool = False

    def __post_init__(self):
        if not (-1e-9 <= self.lower <= 1 + 1e-7 and -1e-9 <= self.upper <= 1 + 1e-7):
            raise ValueError(f"bounds ({self.lower}, {self.upper}) outside [0, 1]")
        if self.lower > self.upper + 1e-7:
            raise ValueError(f"lower bound {self.lower} exceeds upper bound {self.upper}")

    @property
    def gap(self) -> float:
        return self.upper - self.lower


@dataclass(frozen=True)
class ExtendibleProgram:
    """Assembled SDP for an N-extendible single-clone Choi state."""

    ensemble_label: str
    n_clones: int
    mode: str            # "full-perm" | "bose"
    d_in: int
    d_clone: int
    var_dim: int
    problem: sdp.SdpProblem
    block_roles: dict = field(default_factory=dict)


@dataclass
class ConvergeRow:
    n: int
    fc: float
    mode: str
    negativity: float
    status: str
    residual: float


@dataclass
class ConvergenceReport:
    ensemble_label: str
    mode: str
    rows: list
    fm_bounds: FidelityBounds
    monotone: bool
    final_gap: float
    seed: int
    tol: float


@dataclass
class TradeoffPoint:
    fa: float
    fb: float
    status: str
    residual: float


@dataclass
class TradeoffCurve:
    ensemble_label: str
    n_b: int
    points: list

    @property
    def monotone(self) -> bool:
        vals = [p.fb for p in self.points if np.isfinite(p.fb)]
        return all(vals[i + 1] <= vals[i] + 1e-6 for i in range(len(vals) - 1))


# ---------------------------------------------------------------------------
# constraint-row builders


def _tp_rows(nblocks: int, block: int, d_ref: int, d_rest: int):
    """Rows for tr_rest X = I/d_ref on the given block."""
    rows = []
    eye = np.eye(d_rest, dtype=complex)
    for p in range(d_ref):
        for q in range(p, d_ref):
            coeffs = [None] * nblocks
            coeffs[block] = np.kron(sdp.re_entry(d_ref, p, q), eye)
            rows.append((coeffs, (1.0 / d_ref) if p == q else 0.0))
            if p != q:
                coeffs = [None] * nblocks
                coeffs[block] = np.kron(sdp.im_entry(d_ref, p, q), eye)
                rows.append((coeffs, 0.0))
    return rows


def _perm_orbit_rows(nblocks: int, block: int, d_full: int, index_maps):
    """Minimal equality rows making a Hermitian block invariant under the
    index permutations in `index_maps` and the group they generate.

    Matrix entries fall into orbits of the group acting by
    (a, b) -> (g(a), g(b)); within an orbit all real parts agree and the
    imaginary parts agree up to the sign flips Hermiticity induces when an
    index pair crosses the diagonal.  A signed union-find finds the orbits; a
    spanning tree per orbit then yields exactly one independent row per edge,
    and a sign contradiction inside an orbit pins every member to zero.
    """
    d = d_full

    def node(a, b, kind):
        return (a * d + b) * 2 + kind

    parent = np.arange(d * d * 2)
    sign = np.ones(d * d * 2, dtype=np.int8)
    forced_zero = np.zeros(d * d * 2, dtype=bool)

    def find(i):
        chain = []
        while parent[i] != i:
            chain.append(i)
            i = parent[i]
        s_rel = 1
        for nd in reversed(chain):
            s_rel = s_rel * sign[nd]
            parent[nd] = i
            sign[nd] = s_rel
        return i, (sign[chain[0]] if chain else 1)

    def union(i, j, s):
        ri, si = find(i)
        rj, sj = find(j)
        if ri == rj:
            if si != s * sj:
                forced_zero[ri] = True
            return
        parent[ri] = rj
        sign[ri] = s * sj * si
        forced_zero[rj] = forced_zero[rj] or forced_zero[ri]

    for gmap in index_maps:
        for a in range(d):
            ga = int(gmap[a])
            for b in range(a, d):
                gb = int(gmap[b])
                c, e = (ga, gb) if ga <= gb else (gb, ga)
                union(node(c, e, 0), node(a, b, 0), 1)
                if a != b:
                    if ga < gb:
                        union(node(ga, gb, 1), node(a, b, 1), 1)
                    else:
                        union(node(gb, ga, 1), node(a, b, 1), -1)

    groups: dict[int, list] = {}
    for a in range(d):
        for b in range(a, d):
            for kind in (0, 1):
                if kind == 1 and a == b:
                    continue
                i = node(a, b, kind)
                r, s = find(i)
                groups.setdefault(r, []).append((i, s))

    def coeff(i):
        kind = i % 2
        ab = i // 2
        a, b = ab // d, ab % d
        return sdp.re_entry(d, a, b) if kind == 0 else sdp.im_entry(d, a, b)

    rows = []
    for root, members in groups.items():
        if forced_zero[root]:
            for i, _ in members:
                coeffs = [None] * nblocks
                coeffs[block] = coeff(i)
                rows.append((coeffs, 0.0))
            continue
        if len(members) < 2:
            continue
        anchor, s_anchor = members[0]
        for i, s in members[1:]:
            coeffs = [None] * nblocks
            coeffs[block] = coeff(i) - (s * s_anchor) * coeff(anchor)
            rows.append((coeffs, 0.0))
    return rows


def _clone_index_map(d_in: int, d: int, n: int, perm) -> np.ndarray:
    """Basis-index permutation on C^{d_in} (x) (C^d)^(x)n moving clone factor k to slot perm[k]."""
    big = d**n
    digits = np.unravel_index(np.arange(big), (d,) * n)
    out_digits: list = [None] * n
    for k in range(n):
        out_digits[perm[k]] = digits[k]
    cmap = np.ravel_multi_index(tuple(out_digits), (d,) * n)
    return (np.arange(d_in)[:, None] * big + cmap[None, :]).reshape(-1)


def _pt_link_rows(nblocks: int, b_src: int, b_pt: int, d_ref: int, d_rest: int):
    """Rows enforcing X[b_pt] = partial transpose of X[b_src] on the reference factor."""
    dd = d_ref * d_rest
    rows = []
    for i in range(dd):
        r, s = divmod(i, d_rest)
        for j in range(i, dd):
            r2, t = divmod(j, d_rest)
            ip = r2 * d_rest + s
            jp = r * d_rest + t
            coeffs = [None] * nblocks
            u, v = (ip, jp) if ip <= jp else (jp, ip)
            coeffs[b_pt] = sdp.re_entry(dd, i, j)
            coeffs[b_src] = -sdp.re_entry(dd, u, v)
            rows.append((coeffs, 0.0))
            if i != j:
                coeffs = [None] * nblocks
                coeffs[b_pt] = sdp.im_entry(dd, i, j)
                if ip < jp:
                    coeffs[b_src] = -sdp.im_entry(dd, ip, jp)
                elif ip > jp:
                    coeffs[b_src] = sdp.im_entry(dd, jp, ip)
                rows.append((coeffs, 0.0))
    return rows


# ---------------------------------------------------------------------------
# Bose-symmetric compression (occupation-number algebra)


def _second_quantized(op: np.ndarray, n: int) -> np.ndarray:
    """Lift a single-site operator to the n-particle symmetric subspace:
    dGamma(op) = sum_{pq} op_{pq} a_p^dag a_q in the occupation basis matching
    `sym_isometry`'s column order."""
    d = op.shape[0]
    tuples = sym_basis(d, n)
    occs = []
    index: dict[tuple, int] = {}
    for c, t in enumerate(tuples):
        occ = [0] * d
        for i in t:
            occ[i] += 1
        occ = tuple(occ)
        occs.append(occ)
        index[occ] = c
    s_dim = len(tuples)
    out = np.zeros((s_dim, s_dim), dtype=complex)
    for c, occ in enumerate(occs):
        for q in range(d):
            nq = occ[q]
            if nq == 0:
                continue
            for p in range(d):
                if op[p, q] == 0:
                    continue
                if p == q:
                    out[c, c] += op[q, q] * nq
                else:
                    m = list(occ)
                    m[q] -= 1
                    m[p] += 1
                    amp = np.sqrt(nq * (occ[p] + 1))
                    out[index[tuple(m)], c] += op[p, q] * amp
    return out


def _bose_lift(omega: np.ndarray, d_in: int, d: int, n: int) -> np.ndarray:
    """Compress Omega (x) 1^{(n-1)} through the symmetric-subspace isometry:
    entries <r,s| . |r',t> = dGamma(omega_{rr'})_{st} / n."""
    s_dim = sym_dim(d, n)
    out = np.zeros((d_in * s_dim, d_in * s_dim), dtype=complex)
    for r in range(d_in):
        for r2 in range(d_in):
            blockop = omega[r * d:(r + 1) * d, r2 * d:(r2 + 1) * d]
            if not np.any(blockop):
                continue
            out[r * s_dim:(r + 1) * s_dim, r2 * s_dim:(r2 + 1) * s_dim] = \
                _second_quantized(blockop, n) / n
    return 0.5 * (out + out.conj().T)


def _bose_marginal(rho: np.ndarray, d_in: int, d: int, n: int) -> np.ndarray:
    """Single-clone marginal (on d_in (x) d) of a Bose-compressed extension."""
    s_dim = sym_dim(d, n)
    eye = np.eye(d, dtype=complex)
    ladders = [[_second_quantized(np.outer(eye[q], eye[p]), n) / n
                for q in range(d)] for p in range(d)]
    out = np.zeros((d_in * d, d_in * d), dtype=complex)
    for r in range(d_in):
        for r2 in range(d_in):
            blk = rho[r * s_dim:(r + 1) * s_dim, r2 * s_dim:(r2 + 1) * s_dim]
            for p in range(d):
                for q in range(d):
                    out[r * d + p, r2 * d + q] = np.trace(blk @ ladders[p][q])
    return 0.5 * (out + out.conj().T)


def _repair_choi(st: np.ndarray, d_ref: int, d_rest: int) -> np.ndarray:
    """Tiny deterministic projection of a solver block onto the Choi invariants."""
    st = 0.5 * (st + st.conj().T)
    marg = partial_trace(st, (d_ref, d_rest), keep=[0])
    st = st + np.kron(np.eye(d_ref) / d_ref - marg, np.eye(d_rest, dtype=complex) / d_rest)
    w, u = np.linalg.eigh(st)
    w = np.maximum(w, 0.0)
    st = (u * w) @ u.conj().T
    st = st / np.trace(st).real
    return 0.5 * (st + st.conj().T)


# ---------------------------------------------------------------------------
# estimation: SDP upper bound and see-saw lower bound


def fm_upper(e: Ensemble, dps_level: int = 0, tol: float = sdp.DEFAULT_TOL) -> float:
    """Upper bound on the estimation fidelity from the separability relaxation.

    Maximises d_in tr(Omega J) over trace-preserving Choi states J whose
    reference-side partial transpose is PSD (level 0), with a Bose-symmetric
    k-extension of the target factor added at level k.  Exact at level 0 for
    qubit-to-qubit ensembles, where PPT coincides with separability; for
    larger systems the value is an upper bound only and is reported as such.
    """
    if dps_level < 0:
        raise ValueError("dps_level must be >= 0")
    n_ext = max(1, dps_level)
    prog = _assemble_extendible(e, n_ext, "bose", with_ppt=True)
    sol = sdp.solve(prog.problem, tol=tol)
    if sol.status != "optimal":
        raise sdp.SolverError(
            f"fm_upper did not reach an optimal certificate: {sol.status} "
            f"(residuals {sol.residuals})", sol)
    return float(min(sol.value, 1.0 + 1e-9))


def fm_is_exact(e: Ensemble) -> bool:
    """PPT equals separability only on 2x2 (and 2x3) systems."""
    return e.d_in * e.d_target <= 6


def _povm_problem(d: int, payoffs) -> sdp.SdpProblem:
    n = len(payoffs)
    cons = []
    for p in range(d):
        for q in range(p, d):
            cons.append(([sdp.re_entry(d, p, q)] * n, 1.0 if p == q else 0.0))
            if p != q:
                cons.append(([sdp.im_entry(d, p, q)] * n, 0.0))
    return sdp.SdpProblem.build([d] * n, list(payoffs), cons)


def _top_eigvec(s: np.ndarray) -> np.ndarray:
    w, u = np.linalg.eigh(0.5 * (s + s.conj().T))
    top = w[-1]
    idx = int(np.argmax(w >= top - 1e-12 * max(1.0, abs(top))))
    return state(u[:, idx])


def _strategy_value(e: Ensemble, povm, guesses) -> float:
    val = 0.0
    for p, s_in, t in zip(e.weights, e.inputs, e.targets):
        for m, phi in zip(povm, guesses):
            val += p * np.real(np.vdot(s_in, m @ s_in)) * abs(np.vdot(t, phi)) ** 2
    return float(val)


def fm_seesaw(e: Ensemble, n_outcomes: int | None = None, restarts: int = 20,
              seed: int = 42, tol: float = sdp.DEFAULT_TOL):
    """Lower bound on the estimation fidelity, with the achieving strategy.

    Alternates an exact POVM step (linear SDP for fixed guesses) with the
    closed-form guess step (top eigenvector of the conditional target
    average); the objective never decreases along the alternation.  Returns
    the best value over `restarts` seeded starts and its strategy.
    """
    d_in, d_t = e.d_in, e.d_target
    if n_outcomes is None:
        n_outcomes = d_in * d_in
    if n_outcomes < 1:
        raise ValueError("need at least one outcome")
    rng = np.random.default_rng(seed)
    in_projs = [proj(s) for s in e.inputs]
    t_projs = [proj(t) for t in e.targets]
    rho_avg = sum(p * pr for p, pr in zip(e.weights, in_projs))

    starts = [[state(e.targets[j % len(e)]) for j in range(n_outcomes)]]
    for _ in range(max(0, restarts - 1)):
        g = []
        for _ in range(n_outcomes):
            v = rng.standard_normal(d_t) + 1j * rng.standard_normal(d_t)
            g.append(state(v / np.linalg.norm(v)))
        starts.append(g)

    best_val = -np.inf
    best_strategy = None
    for guesses in starts:
        prev = -np.inf
        povm = None
        for _ in range(SEESAW_MAX_ROUNDS):
            payoffs = []
            for phi in guesses:
                r = sum(p * abs(np.vdot(t, phi)) ** 2 * pr
                        for p, t, pr in zip(e.weights, e.targets, in_projs))
                payoffs.append(hermitian(r, tol=1e-9))
            sol = sdp.solve(_povm_problem(d_in, payoffs), tol=tol)
            if max(sol.residuals.values()) > 1e-6:
                raise sdp.SolverError("POVM step failed to converge", sol)
            povm = sol.blocks
            val_m = sol.value
            if val_m < prev - MONOTONE_SLACK:
                raise RuntimeError(f"see-saw decreased at POVM step: {prev} -> {val_m}")
            new_guesses = []
            for j, m in enumerate(povm):
                # zero-probability outcomes keep their previous guess
                if np.real(np.trace(m @ rho_avg)) < 1e-14:
                    new_guesses.append(guesses[j])
                    continue
                s_j = sum(p * np.real(np.vdot(s_in, m @ s_in)) * tp
                          for p, s_in, tp in zip(e.weights, e.inputs, t_projs))
                new_guesses.append(_top_eigvec(s_j))
            guesses = new_guesses
            val = _strategy_value(e, povm, guesses)
            if val < val_m - MONOTONE_SLACK:
                raise RuntimeError(f"see-saw decreased at guess step: {val_m} -> {val}")
            done = val - prev < SEESAW_STOP * max(1.0, abs(val))
            prev = val
            if done:
                break
        if prev > best_val:
            best_val = prev
            best_strategy = (povm, guesses)

    povm, guesses = best_strategy
    # exact renormalisation sum_j M_j = 1 (solver leaves ~tol drift)
    total = sum(povm)
    w, u = np.linalg.eigh(0.5 * (total + total.conj().T))
    t_ihalf = (u / np.sqrt(np.maximum(w, 1e-300))) @ u.conj().T
    povm = [hermitian(t_ihalf @ m @ t_ihalf, tol=1e-9) for m in povm]
    strategy = EstimationStrategy(tuple(povm), tuple(guesses))
    return _strategy_value(e, strategy.povm, strategy.guesses), strategy


def fm_bounds(e: Ensemble, dps_level: int = 0, n_outcomes: int | None = None,
              restarts: int = 20, seed: int = 42,
              tol: float = sdp.DEFAULT_TOL) -> tuple[FidelityBounds, EstimationStrategy]:
    lower, strategy = fm_seesaw(e, n_outcomes, restarts, seed, tol)
    upper = fm_upper(e, dps_level, tol)
    return FidelityBounds(lower=lower, upper=upper,
                          upper_exact=fm_is_exact(e)), strategy


# ---------------------------------------------------------------------------
# cloning


def _assemble_extendible(e: Ensemble, n: int, mode: str,
                         with_ppt: bool = False) -> ExtendibleProgram:
    d_in, d = e.d_in, e.d_target
    om = fidelity_operator(e)
    if mode == "bose":
        s_dim = sym_dim(d, n)
        var = d_in * s_dim
        if var > DIM_CAP:
            raise DimensionCapError(f"bose variable dimension {var} exceeds cap {DIM_CAP}")
        nblocks = 2 if with_ppt else 1
        obj = [d_in * _bose_lift(om, d_in, d, n)] + [None] * (nblocks - 1)
        cons = _tp_rows(nblocks, 0, d_in, s_dim)
        if with_ppt:
            cons += _pt_link_rows(nblocks, 0, 1, d_in, s_dim)
        problem = sdp.SdpProblem.build([var] * nblocks, obj, cons)
        roles = {"extension": 0} | ({"ppt": 1} if with_ppt else {})
        return ExtendibleProgram(e.label, n, mode, d_in, d, var, problem, roles)
    if mode == "full-perm":
        big = d**n
        var = d_in * big
        if var > DIM_CAP:
            raise DimensionCapError(f"full-perm variable dimension {var} exceeds cap {DIM_CAP}")
        if with_ppt:
            raise ValueError("the PPT relaxation is only assembled in bose mode")
        objective = d_in * np.kron(om, np.eye(d**(n - 1)))
        cons = _tp_rows(1, 0, d_in, big)
        if n >= 2:
            gens = [_clone_index_map(d_in, d, n, (1, 0) + tuple(range(2, n)))]
            if n >= 3:
                gens.append(_clone_index_map(d_in, d, n, tuple((k + 1) % n for k in range(n))))
            cons += _perm_orbit_rows(1, 0, var, gens)
        problem = sdp.SdpProblem.build([var], [objective], cons)
        return ExtendibleProgram(e.label, n, mode, d_in, d, var, problem, {"extension": 0})
    raise ValueError(f"unknown mode {mode!r}, expected 'full-perm' or 'bose'")


def build_extendible_program(e: Ensemble, n: int, mode: str) -> ExtendibleProgram:
    """Assemble (without solving) the N-extendible-Choi SDP."""
    if n < 1:
        raise ValueError("clone count must be >= 1")
    return _assemble_extendible(e, n, mode)


def _fc_ext_solve(e: Ensemble, n: int, mode: str, tol: float):
    prog = build_extendible_program(e, n, mode)
    sol = sdp.solve(prog.problem, tol=tol)
    ext = sol.blocks[prog.block_roles["extension"]]
    marginal = None
    try:
        if mode == "bose":
            marg = _bose_marginal(ext, e.d_in, e.d_target, n)
        else:
            marg = partial_trace(ext, (e.d_in,) + (e.d_target,) * n, keep=[0, 1])
        marginal = ChoiMatrix(e.d_in, e.d_target, _repair_choi(marg, e.d_in, e.d_target))
    except ValueError:
        pass  # non-optimal iterate too far from the Choi set; value still reported
    return float(sol.value), marginal, sol


def fc_ext(e: Ensemble, n: int, mode: str = "full-perm",
           tol: float = sdp.DEFAULT_TOL) -> float:
    """Optimal N-clone fidelity via the N-extendible-Choi SDP.

    full-perm imposes invariance under the clone permutations generated by
    the first transposition and the N-cycle (the exact symmetric-machine
    optimum); bose restricts the extension to the symmetric subspace of the
    clones, which scales to large N and is tight for the universal and
    phase-covariant ensembles.
    """
    value, _, sol = _fc_ext_solve(e, n, mode, tol)
    if sol.status != "optimal":
        raise sdp.SolverError(
            f"fc_ext({mode}, N={n}) stopped at {sol.status} (residuals {sol.residuals})", sol)
    return value


def _fc_direct_solve(e: Ensemble, n: int, tol: float):
    if n < 1:
        raise ValueError("clone count must be >= 1")
    d_in, d = e.d_in, e.d_target
    big = d**n
    var = d_in * big
    if var > DIM_CAP:
        raise DimensionCapError(f"variable dimension {var} exceeds cap {DIM_CAP}")
    om = fidelity_operator(e)
    base = np.kron(om, np.eye(d**(n - 1)))
    obj = np.zeros((var, var), dtype=complex)
    for k in range(n):
        if k == 0:
            obj += base
        else:
            swap = tuple(k if i == 0 else (0 if i == k else i) for i in range(n))
            p = np.kron(np.eye(d_in), perm_operator(d, n, swap))
            obj += p @ base @ p.T
    obj *= d_in / n
    problem = sdp.SdpProblem.build([var], [obj], _tp_rows(1, 0, d_in, big))
    sol = sdp.solve(problem, tol=tol)
    optimizer = None
    try:
        st = _repair_choi(sol.blocks[0], d_in, big)
        optimizer = MultiCloneChoi(d_in, d, n, st)
    except ValueError:
        pass
    return float(sol.value), optimizer, sol


def fc_direct(e: Ensemble, n: int, tol: float = sdp.DEFAULT_TOL):
    """Optimal N-clone fidelity over the full multi-clone map, no symmetry imposed.

    Returns (value, MultiCloneChoi optimizer).  Agrees with
    fc_ext(..., "full-perm") because symmetrising any feasible map preserves
    the average clone fidelity.
    """
    value, optimizer, sol = _fc_direct_solve(e, n, tol)
    if sol.status != "optimal" or optimizer is None:
        raise sdp.SolverError(
            f"fc_direct(N={n}) stopped at {sol.status} (residuals {sol.residuals})", sol)
    return value, optimizer


def converge(e: Ensemble, n_max: int, mode: str = "bose", dps_level: int = 0,
             n_outcomes: int | None = None, restarts: int = 20, seed: int = 42,
             tol: float = sdp.DEFAULT_TOL) -> ConvergenceReport:
    """Tabulate F_C(N) for N = 1..n_max against the estimation bounds.

    Each row carries the solver status and the negativity of the optimal
    single-clone marginal; rows that fail keep the report partial rather
    than aborting it.
    """
    if n_max < 2:
        raise ValueError("n_max must be >= 2")
    bounds, _ = fm_bounds(e, dps_level, n_outcomes, restarts, seed, tol)
    rows = []
    for n in range(1, n_max + 1):
        try:
            value, marginal, sol = _fc_ext_solve(e, n, mode, tol)
            rows.append(ConvergeRow(
                n=n, fc=value, mode=mode,
                negativity=negativity(marginal) if marginal is not None else float("nan"),
                status=sol.status, residual=float(max(sol.residuals.values()))))
        except (DimensionCapError, ValueError, sdp.SolverError) as err:
            rows.append(ConvergeRow(n=n, fc=float("nan"), mode=mode,
                                    negativity=float("nan"),
                                    status=f"error: {err}", residual=float("nan")))
    ok = [r.fc for r in rows if np.isfinite(r.fc)]
    monotone = all(ok[i + 1] <= ok[i] + MONOTONE_SLACK for i in range(len(ok) - 1))
    final_gap = (ok[-1] - bounds.lower) if ok else float("nan")
    return ConvergenceReport(ensemble_label=e.label, mode=mode, rows=rows,
                             fm_bounds=bounds, monotone=monotone,
                             final_gap=float(final_gap), seed=seed, tol=tol)


def asym_tradeoff(e: Ensemble, n_b: int, fa_grid,
                  tol: float = sdp.DEFAULT_TOL) -> TradeoffCurve:
    """Largest average fidelity of N_B clones for a floor on the single A-clone.

    One SDP per grid point: full map Choi on reference (x) A (x) B^(x)N_B
    with the A-clone fidelity constrained from below through a slack
    variable.  Grid points above 1 are flagged infeasible without solving.
    """
    if n_b < 1:
        raise ValueError("n_b must be >= 1")
    d_in, d = e.d_in, e.d_target
    n_out = 1 + n_b
    big = d**n_out
    var = d_in * big
    if var > DIM_CAP:
        raise DimensionCapError(f"variable dimension {var} exceeds cap {DIM_CAP}")
    om = fidelity_operator(e)
    base = np.kron(om, np.eye(d**(n_out - 1)))
    om_a = d_in * base
    obj_b = np.zeros((var, var), dtype=complex)
    for k in range(1, n_out):
        swap = tuple(k if i == 0 else (0 if i == k else i) for i in range(n_out))
        p = np.kron(np.eye(d_in), perm_operator(d, n_out, swap))
        obj_b += p @ base @ p.T
    obj_b *= d_in / n_b

    tp = _tp_rows(2, 0, d_in, big)
    points = []
    for fa in fa_grid:
        fa = float(fa)
        if fa > 1.0 + 1e-12:
            points.append(TradeoffPoint(fa=fa, fb=float("nan"),
                                        status="infeasible", residual=float("nan")))
            continue
        if fa >= 1.0 - 1e-12:
            # No interior point: a perfect A-clone pins the reference-A
            # marginal to the maximally entangled state, so the Choi factors
            # as Phi+ (x) rho_B and each B-clone is a blind preparation.
            points.append(TradeoffPoint(fa=fa, fb=blind_guess_value(e),
                                        status="optimal", residual=0.0))
            continue
        cons = list(tp)
        cons.append(([om_a, -np.ones((1, 1), dtype=complex)], fa))
        problem = sdp.SdpProblem.build([var, 1], [obj_b, None], cons)
        sol = sdp.solve(problem, tol=tol)
        points.append(TradeoffPoint(fa=fa, fb=float(sol.value), status=sol.status,
                                    residual=float(max(sol.residuals.values()))))
    return TradeoffCurve(ensemble_label=e.label, n_b=n_b, points=points)
