"""Small dense semidefinite-program solver.

Solves   maximize   sum_b tr(C_b X_b)
         subject to sum_b tr(A_{i,b} X_b) = b_i,   X_b >= 0 (Hermitian PSD),

with a handful of dense Hermitian blocks, via a primal-dual path-following
interior-point method with Nesterov-Todd scaling and a Mehrotra-style
predictor-corrector.  Complex Hermitian blocks are mapped to real symmetric
ones through the standard 2x2 embedding [[Re, -Im], [Im, Re]]; the embedded
coefficients carry a factor 1/2 so objective and constraint values refer to
the original complex problem.

Sized for the Choi-matrix optimisations of this package: a few blocks of
dimension up to a couple hundred and up to a few thousand equality rows.
Numerically dependent constraint rows are dropped up front by a
rank-revealing QR; inconsistent dependent rows make the problem infeasible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .qmath import hermitian

DEFAULT_TOL = 1e-8
MAX_ITER = 200
STEP_FRACTION = 0.98
PREPROC_THRESHOLD = 1e-10

# Largest embedded Schur system this dense formulation will attempt.
ROW_CAP = 8192
EMBED_DIM_CAP = 2048


class SolverError(RuntimeError):
    """Raised when a caller requires an optimal certificate the solver cannot give."""

    def __init__(self, message: str, solution: "SdpSolution | None" = None):
        super().__init__(message)
        self.solution = solution


def re_entry(d: int, a: int, b: int) -> np.ndarray:
    """Hermitian H with tr(H X) = Re X_{ab} for Hermitian X."""
    h = np.zeros((d, d), dtype=complex)
    if a == b:
        h[a, a] = 1.0
    else:
        h[a, b] = 0.5
        h[b, a] = 0.5
    return h


def im_entry(d: int, a: int, b: int) -> np.ndarray:
    """Hermitian H with tr(H X) = Im X_{ab} for Hermitian X (requires a != b)."""
    if a == b:
        raise ValueError("diagonal entries of a Hermitian matrix have no imaginary part")
    h = np.zeros((d, d), dtype=complex)
    h[a, b] = 0.5j
    h[b, a] = -0.5j
    return h


@dataclass(frozen=True)
class SdpProblem:
    """Block-diagonal SDP data, complex Hermitian convention, maximisation.

    constraints: sequence of (coeffs, rhs) where coeffs is a sequence with one
    Hermitian matrix or None per block.
    """

    blocks: tuple[int, ...]
    objective: tuple[np.ndarray, ...]
    constraints: tuple[tuple[tuple, float], ...]

    @staticmethod
    def build(blocks, objective, constraints) -> "SdpProblem":
        blocks = tuple(int(d) for d in blocks)
        if len(blocks) == 0:
            raise ValueError("an SDP needs at least one block")
        if any(d < 1 for d in blocks):
            raise ValueError(f"invalid block dimensions {blocks}")
        if len(objective) != len(blocks):
            raise ValueError("objective must provide one matrix per block")
        obj = tuple(hermitian(c) if c is not None else np.zeros((d, d), dtype=complex)
                    for c, d in zip(objective, blocks))
        rows = []
        for coeffs, rhs in constraints:
            if len(coeffs) != len(blocks):
                raise ValueError("each constraint must provide one entry per block")
            cs = tuple(None if a is None else hermitian(a) for a in coeffs)
            for a, d in zip(cs, blocks):
                if a is not None and a.shape != (d, d):
                    raise ValueError(f"constraint coefficient shape {a.shape} does not match block {d}")
            rows.append((cs, float(rhs)))
        return SdpProblem(blocks, obj, tuple(rows))


@dataclass
class SdpSolution:
    blocks: list[np.ndarray]
    y: np.ndarray
    value: float
    status: str  # "optimal" | "infeasible" | "numerical-limit"
    residuals: dict[str, float]
    dropped_rows: tuple[int, ...] = ()
    iterations: int = 0
    diagnostics: dict = field(default_factory=dict)


def _embed(a: np.ndarray) -> np.ndarray:
    """Real symmetric 2x2 embedding of a Hermitian matrix, scaled by 1/2."""
    re, im = a.real, a.imag
    top = np.hstack([re, -im])
    bot = np.hstack([im, re])
    return 0.5 * np.vstack([top, bot])


def _unembed(y: np.ndarray, k: int) -> np.ndarray:
    """Inverse of the embedding (projects onto the invariant subalgebra)."""
    re = 0.5 * (y[:k, :k] + y[k:, k:])
    im = 0.5 * (y[k:, :k] - y[:k, k:])
    x = re + 1j * im
    return 0.5 * (x + x.conj().T)


def _svec_indices(k: int):
    iu = np.triu_indices(k)
    w = np.where(iu[0] == iu[1], 1.0, np.sqrt(2.0))
    return iu, w


class _BlockOps:
    """Per-block constraint stacks for fast A(X), A^T(y), and Schur assembly."""

    def __init__(self, dims, constraints):
        self.dims = dims
        self.m = len(constraints)
        self.rows: list[np.ndarray] = []
        self.stacks: list[np.ndarray] = []
        for b, k in enumerate(dims):
            idx = [i for i, (coeffs, _) in enumerate(constraints) if coeffs[b] is not None]
            stack = np.empty((len(idx), k * k))
            for j, i in enumerate(idx):
                stack[j] = constraints[i][0][b].reshape(-1)
            self.rows.append(np.asarray(idx, dtype=int))
            self.stacks.append(stack)

    def apply(self, xs) -> np.ndarray:
        out = np.zeros(self.m)
        for b, x in enumerate(xs):
            if self.rows[b].size:
                out[self.rows[b]] += self.stacks[b] @ x.reshape(-1)
        return out

    def adjoint(self, y) -> list[np.ndarray]:
        out = []
        for b, k in enumerate(self.dims):
            if self.rows[b].size:
                out.append((y[self.rows[b]] @ self.stacks[b]).reshape(k, k))
            else:
                out.append(np.zeros((k, k)))
        return out

    def schur(self, ws) -> np.ndarray:
        m = np.zeros((self.m, self.m))
        for b, w in enumerate(ws):
            idx = self.rows[b]
            if not idx.size:
                continue
            k = self.dims[b]
            st3 = self.stacks[b].reshape(-1, k, k)
            waw = np.matmul(w, np.matmul(st3, w)).reshape(idx.size, k * k)
            m[np.ix_(idx, idx)] += self.stacks[b] @ waw.T
        return 0.5 * (m + m.T)


def _nt_scaling(x: np.ndarray, z: np.ndarray):
    """NT scaling point W with W Z W = X, plus Z^{-1}."""
    wz, uz = np.linalg.eigh(z)
    wz = np.maximum(wz, 1e-300)
    sz = np.sqrt(wz)
    z_half = (uz * sz) @ uz.T
    z_ihalf = (uz / sz) @ uz.T
    z_inv = (uz / wz) @ uz.T
    b = z_half @ x @ z_half
    wb, ub = np.linalg.eigh(0.5 * (b + b.T))
    wb = np.maximum(wb, 1e-300)
    b_half = (ub * np.sqrt(wb)) @ ub.T
    w = z_ihalf @ b_half @ z_ihalf
    return 0.5 * (w + w.T), z_inv


def _max_step(s: np.ndarray, ds: np.ndarray) -> float:
    """Largest alpha with s + alpha*ds staying PSD (1.0 if unconstrained)."""
    try:
        l = np.linalg.cholesky(s)
    except np.linalg.LinAlgError:
        l = np.linalg.cholesky(s + np.eye(s.shape[0]) * (1e-14 + 1e-12 * np.trace(s) / s.shape[0]))
    k = sla.solve_triangular(l, ds, lower=True)
    k = sla.solve_triangular(l, k.T, lower=True)
    lam = np.linalg.eigvalsh(0.5 * (k + k.T))[0]
    if lam >= -1e-14:
        return 1.0
    return min(1.0, 1.0 / (-lam))


def _preprocess(rows: np.ndarray, rhs: np.ndarray):
    """Rank-revealing row selection; returns (kept, dropped, consistent)."""
    m = rows.shape[0]
    _, r, piv = sla.qr(rows.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    scale = diag[0] if diag.size and diag[0] > 0 else 1.0
    rank = int(np.sum(diag > PREPROC_THRESHOLD * scale))
    kept = np.sort(piv[:rank])
    dropped = np.sort(piv[rank:])
    consistent = True
    if dropped.size:
        sol, *_ = np.linalg.lstsq(rows[kept].T, rows[dropped].T, rcond=None)
        implied = sol.T @ rhs[kept]
        if np.max(np.abs(implied - rhs[dropped])) > 1e-8 * (1.0 + np.max(np.abs(rhs))):
            consistent = False
    return kept, dropped, consistent


def solve(problem: SdpProblem, tol: float = DEFAULT_TOL, max_iter: int = MAX_ITER) -> SdpSolution:
    """Solve the SDP; deterministic for identical input.

    status "optimal" guarantees primal/dual feasibility residuals and the
    relative duality gap are all <= tol.  On iteration exhaustion the best
    iterate is returned with status "numerical-limit" and its residuals.
    """
    dims_c = problem.blocks
    dims = [2 * k for k in dims_c]
    if sum(dims) > EMBED_DIM_CAP:
        raise ValueError(f"total embedded dimension {sum(dims)} exceeds cap {EMBED_DIM_CAP}")
    if len(problem.constraints) > ROW_CAP:
        raise ValueError(f"{len(problem.constraints)} constraint rows exceed cap {ROW_CAP}")

    c_e = [_embed(c) for c in problem.objective]
    rows_e = []
    rhs = np.array([r for _, r in problem.constraints])
    for coeffs, _ in problem.constraints:
        rows_e.append([None if a is None else _embed(a) for a in coeffs])

    # svec matrix of all rows for rank-revealing preprocessing
    sv = [_svec_indices(k) for k in dims]
    nsv = [k * (k + 1) // 2 for k in dims]
    rmat = np.zeros((len(rows_e), sum(nsv)))
    for i, coeffs in enumerate(rows_e):
        off = 0
        for b, a in enumerate(coeffs):
            if a is not None:
                (iu, w) = sv[b]
                rmat[i, off:off + nsv[b]] = a[iu] * w
            off += nsv[b]
    kept, dropped, consistent = _preprocess(rmat, rhs)
    del rmat
    if not consistent:
        return SdpSolution(
            blocks=[np.zeros((k, k), dtype=complex) for k in dims_c],
            y=np.zeros(len(rows_e)), value=float("nan"), status="infeasible",
            residuals={"primal": float("inf"), "dual": float("inf"), "gap": float("inf")},
            dropped_rows=tuple(int(i) for i in dropped),
            diagnostics={"reason": "inconsistent dependent constraint rows"})

    acons = [(tuple(rows_e[i]), rhs[i]) for i in kept]
    b_vec = rhs[kept]
    ops = _BlockOps(dims, acons)
    m = len(acons)

    norm_b = np.linalg.norm(b_vec)
    norm_c = np.sqrt(sum(np.sum(c * c) for c in c_e))
    n_tot = sum(dims)

    # infeasible start from scaled identity blocks
    amax = 1.0
    for b in range(len(dims)):
        if ops.stacks[b].size:
            amax = max(amax, float(np.max(np.linalg.norm(ops.stacks[b], axis=1))))
    eta_p = max(10.0, np.sqrt(n_tot), (1.0 + float(np.max(np.abs(b_vec))) if m else 1.0) / amax * n_tot)
    eta_d = max(10.0, np.sqrt(n_tot), norm_c, amax)
    xs = [np.eye(k) * eta_p for k in dims]
    zs = [np.eye(k) * eta_d for k in dims]
    y = np.zeros(m)

    def residuals_at(xs, y, zs):
        rp = b_vec - ops.apply(xs)
        aty = ops.adjoint(y)
        rd = [c_e[b] + zs[b] - aty[b] for b in range(len(dims))]
        pres = np.linalg.norm(rp) / (1.0 + norm_b)
        dres = np.sqrt(sum(np.sum(r * r) for r in rd)) / (1.0 + norm_c)
        pobj = sum(np.sum(c_e[b] * xs[b]) for b in range(len(dims)))
        dobj = float(b_vec @ y)
        gap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        return rp, rd, pres, dres, gap, pobj, dobj

    best = None
    best_score = np.inf
    status = "numerical-limit"
    reason = "max iterations"
    it = 0
    stall = 0
    old_err = np.seterr(over="ignore", invalid="ignore", divide="ignore")

    for it in range(1, max_iter + 1):
        rp, rd, pres, dres, gap, pobj, dobj = residuals_at(xs, y, zs)
        if not np.isfinite(pres + dres + gap + pobj + dobj):
            reason = "iterates diverged (non-finite)"
            break
        score = max(pres, dres, gap)
        if score < best_score:
            best_score = score
            best = ([x.copy() for x in xs], y.copy(), [z.copy() for z in zs])
        if pres <= tol and dres <= tol and gap <= tol:
            status = "optimal"
            best = (xs, y, zs)
            break
        if dobj < -1e10 * (1.0 + norm_b) and dres <= 1e-6:
            status = "infeasible"
            reason = "dual objective diverging"
            break
        if max(abs(pobj), abs(dobj)) > 1e14:
            reason = "iterates diverging"
            break

        mu = sum(np.sum(xs[b] * zs[b]) for b in range(len(dims))) / n_tot
        try:
            scal = [_nt_scaling(xs[b], zs[b]) for b in range(len(dims))]
        except (np.linalg.LinAlgError, ValueError):
            reason = "scaling breakdown"
            break
        ws = [s[0] for s in scal]
        zinvs = [s[1] for s in scal]

        m_schur = ops.schur(ws)
        if not np.all(np.isfinite(m_schur)):
            reason = "Schur system diverged (non-finite)"
            break
        try:
            cho = sla.cho_factor(m_schur + np.eye(m) * (1e-14 * (1.0 + np.trace(m_schur) / max(m, 1))), lower=True)
        except (np.linalg.LinAlgError, ValueError):
            try:
                cho = sla.cho_factor(m_schur + np.eye(m) * (1e-8 * (1.0 + np.trace(m_schur) / max(m, 1))), lower=True)
            except (np.linalg.LinAlgError, ValueError):
                reason = "Schur factorisation failure"
                break

        def direction(rc):
            rhs_dy = ops.apply(rc) + ops.apply([ws[b] @ rd[b] @ ws[b] for b in range(len(dims))]) - rp
            dy = sla.cho_solve(cho, rhs_dy) if m else np.zeros(0)
            atdy = ops.adjoint(dy)
            dzs = [atdy[b] - rd[b] for b in range(len(dims))]
            dxs = []
            for b in range(len(dims)):
                dx = rc[b] - ws[b] @ dzs[b] @ ws[b]
                dxs.append(0.5 * (dx + dx.T))
            return dy, dxs, dzs

        try:
            # predictor
            rc_aff = [-xs[b] for b in range(len(dims))]
            dy_a, dx_a, dz_a = direction(rc_aff)
            ap_a = min(_max_step(xs[b], dx_a[b]) for b in range(len(dims)))
            ad_a = min(_max_step(zs[b], dz_a[b]) for b in range(len(dims)))
            mu_aff = sum(np.sum((xs[b] + ap_a * dx_a[b]) * (zs[b] + ad_a * dz_a[b]))
                         for b in range(len(dims))) / n_tot
            sigma = min(max((max(mu_aff, 0.0) / mu) ** 3, 1e-8), 0.999)

            # corrector with Mehrotra second-order term
            rc = [sigma * mu * zinvs[b] - xs[b]
                  - 0.5 * (dx_a[b] @ dz_a[b] @ zinvs[b] + (dx_a[b] @ dz_a[b] @ zinvs[b]).T)
                  for b in range(len(dims))]
            dy, dxs, dzs = direction(rc)
            ap = min(_max_step(xs[b], dxs[b]) for b in range(len(dims)))
            ad = min(_max_step(zs[b], dzs[b]) for b in range(len(dims)))
            if min(ap, ad) < 0.05 * max(min(ap_a, ad_a), 1e-8):
                # corrector overshoots; fall back to a plain centering step
                rc = [sigma * mu * zinvs[b] - xs[b] for b in range(len(dims))]
                dy, dxs, dzs = direction(rc)
                ap = min(_max_step(xs[b], dxs[b]) for b in range(len(dims)))
                ad = min(_max_step(zs[b], dzs[b]) for b in range(len(dims)))
        except (np.linalg.LinAlgError, ValueError):
            reason = "step computation breakdown"
            break
        ap = min(1.0, STEP_FRACTION * ap)
        ad = min(1.0, STEP_FRACTION * ad)

        for b in range(len(dims)):
            xs[b] = 0.5 * ((xs[b] + ap * dxs[b]) + (xs[b] + ap * dxs[b]).T)
            zs[b] = 0.5 * ((zs[b] + ad * dzs[b]) + (zs[b] + ad * dzs[b]).T)
        y = y + ad * dy

        if max(ap, ad) < 1e-7:
            stall += 1
            if stall >= 3:
                reason = "step length collapse"
                break
        else:
            stall = 0

    np.seterr(**old_err)
    xs_f, y_f, zs_f = best if best is not None else (xs, y, zs)
    _, _, pres, dres, gap, pobj, dobj = residuals_at(xs_f, y_f, zs_f)
    if status != "infeasible" and pres <= tol and dres <= tol and gap <= tol:
        status = "optimal"

    blocks_c = [_unembed(xs_f[b], dims_c[b]) for b in range(len(dims))]
    value = float(sum(np.real(np.trace(problem.objective[b] @ blocks_c[b]))
                      for b in range(len(dims))))
    y_full = np.zeros(len(rows_e))
    y_full[kept] = y_f
    return SdpSolution(
        blocks=blocks_c, y=y_full, value=value, status=status,
        residuals={"primal": float(pres), "dual": float(dres), "gap": float(gap)},
        dropped_rows=tuple(int(i) for i in dropped),
        iterations=it,
        diagnostics={} if status == "optimal" else {"reason": reason})
