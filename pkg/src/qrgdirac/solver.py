"""Nonlinear least squares over the local tensorial conditions.

A `SolveProblem` owns a layout of named real or complex slots, a builder that
turns slot values into the matrix data (C, sigma_S, J, ...), and a list of
residual blocks.  Everything is batched: residuals are evaluated for many
parameter vectors at once, which keeps the finite-difference Jacobian and
the multistart loop vectorised.
"""
from __future__ import annotations

import dataclasses
import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigurationError
from .relations import Dual, concat

log = logging.getLogger(__name__)

FD_STEP = 1e-7
SUCCESS_TOL = 1e-9
# a run is stalled when its cost drops by less than STALL_GAIN over STALL_WINDOW iterations
STALL_WINDOW = 20
STALL_GAIN = 1e-3


@dataclass(frozen=True)
class Slot:
    name: str
    shape: Tuple[int, ...] = ()
    kind: str = "real"  # real | complex

    @property
    def size(self) -> int:
        return int(np.prod(self.shape, dtype=int))

    @property
    def nreal(self) -> int:
        return self.size * (2 if self.kind == "complex" else 1)


@dataclass
class SolveProblem:
    name: str
    slots: List[Slot]
    builder: Callable[[Dict[str, object]], Dict[str, object]]
    constraints: List[Tuple[str, Callable[[Dict[str, object]], object]]]
    pins: Dict[str, object] = field(default_factory=dict)
    description: str = ""
    # maps a converged parameter vector to its gauge invariants
    invariants: Optional[Callable[[Dict[str, object]], np.ndarray]] = None
    # named scalar diagnostics read off converged points
    diagnostics: Optional[Callable[[Dict[str, object]], Dict[str, float]]] = None
    start_scale: float = 1.0
    # discrete slots enumerated outside the continuous solve
    signs: Dict[str, Sequence[float]] = field(default_factory=dict)
    # single point data -> (SpinorBundle, Connection) for verifier cross-checks
    realise: Optional[Callable[[Dict[str, object]], tuple]] = None

    def __post_init__(self):
        names = [s.name for s in self.slots]
        if len(set(names)) != len(names):
            raise ConfigurationError(f"duplicate slot names in {self.name}")
        for k in list(self.pins) + list(self.signs):
            if k not in names:
                raise ConfigurationError(f"pin or sign for unknown slot {k!r}")
        if not self.constraints:
            raise ConfigurationError("a problem needs at least one constraint")

    # layout ---------------------------------------------------------------------

    @property
    def free_slots(self) -> List[Slot]:
        return [s for s in self.slots if s.name not in self.pins]

    @property
    def dim(self) -> int:
        return sum(s.nreal for s in self.free_slots)

    def pin(self, **values) -> "SolveProblem":
        pins = dict(self.pins)
        pins.update(values)
        signs = {k: v for k, v in self.signs.items() if k not in values}
        return dataclasses.replace(self, pins=pins, signs=signs)

    def sign_combinations(self) -> List[Dict[str, float]]:
        names = list(self.signs)
        return [dict(zip(names, combo)) for combo in itertools.product(*(self.signs[k] for k in names))]

    def point(self, x) -> Dict[str, object]:
        """Data for a single parameter vector with the batch axis removed."""
        d = self.data(np.atleast_2d(np.asarray(x, dtype=float)))
        out = {}
        for k, v in d.items():
            if isinstance(v, dict):
                out[k] = {a: np.asarray(b)[0] for a, b in v.items()}
            elif isinstance(v, np.ndarray) and v.ndim >= 1 and v.shape[0] == 1:
                out[k] = v[0]
            else:
                out[k] = v
        return out

    def unpack(self, X) -> Dict[str, object]:
        """(B, dim) real parameters -> slot values with a leading batch axis."""
        B = X.shape[0]
        out: Dict[str, object] = {}
        off = 0
        for s in self.slots:
            if s.name in self.pins:
                val = np.asarray(self.pins[s.name], dtype=complex)
                out[s.name] = np.broadcast_to(val, (B,) + s.shape)
                continue
            k = s.size
            re = X[:, off:off + k]
            off += k
            if s.kind == "complex":
                im = X[:, off:off + k]
                off += k
                val = re + 1j * im
            else:
                val = re + 0j
            out[s.name] = val.reshape(B, *s.shape) if s.shape else val.reshape(B)
        return out

    def pack(self, values: Dict[str, object]) -> np.ndarray:
        """Slot values for one point -> real parameter vector (free slots only)."""
        parts = []
        for s in self.free_slots:
            if s.name not in values:
                raise ConfigurationError(f"missing value for slot {s.name!r}")
            v = np.asarray(values[s.name], dtype=complex).reshape(-1)
            if v.size != s.size:
                raise ConfigurationError(f"slot {s.name!r} expects {s.size} entries")
            parts.append(v.real)
            if s.kind == "complex":
                parts.append(v.imag)
        return np.concatenate(parts) if parts else np.zeros(0)

    def data(self, X) -> Dict[str, object]:
        vals = self.unpack(X)
        d = self.builder(vals)
        d.setdefault("_slots", vals)
        return d

    def residual_blocks(self, X) -> Dict[str, object]:
        d = self.data(X)
        return {name: fn(d) for name, fn in self.constraints}

    def layout_report(self) -> dict:
        m = self.residual_dim()
        return {"unknowns": self.dim, "residuals": m, "underdetermined": m < self.dim,
                "slots": [(s.name, list(s.shape), s.kind, s.name in self.pins) for s in self.slots],
                "constraints": [c for c, _ in self.constraints]}

    def residual_dim(self) -> int:
        q = self.pin(**self.sign_combinations()[0]) if self.signs else self
        return build_residual(q, np.zeros((1, q.dim)) + 0.3).shape[1]


def build_residual(p: SolveProblem, X) -> np.ndarray:
    """Realified stacked residual: (B, dim) -> (B, 2 * #complex equations)."""
    single = np.ndim(X) == 1
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != p.dim:
        raise ConfigurationError(f"{p.name}: expected {p.dim} parameters, got {X.shape[1]}")
    with np.errstate(all="ignore"):
        blocks = p.residual_blocks(X)
        r = concat([np.asarray(b) for b in blocks.values()], axis=-1)
    r = np.concatenate([r.real, r.imag], axis=-1)
    r = np.where(np.isfinite(r), r, 1e150)
    return r[0] if single else r


def directional_derivative(p: SolveProblem, x, v) -> np.ndarray:
    """Forward-mode derivative of the realified residual at x along v."""
    X = Dual(np.asarray(x, dtype=float)[None, :], np.asarray(v, dtype=float)[None, :])
    blocks = p.residual_blocks(X)
    parts = []
    for b in blocks.values():
        if isinstance(b, Dual):
            parts.append(np.broadcast_to(b.d, b.v.shape))
        else:
            parts.append(np.zeros(np.shape(b), complex))
    d = np.concatenate(parts, axis=-1)[0]
    return np.concatenate([d.real, d.imag])


def jacobian(p: SolveProblem, X, h: float = FD_STEP) -> np.ndarray:
    """Central-difference Jacobian for a batch: (B, dim) -> (B, m, dim)."""
    B, P = X.shape
    E = np.eye(P) * h
    Xp = (X[:, None, :] + E[None]).reshape(B * P, P)
    Xm = (X[:, None, :] - E[None]).reshape(B * P, P)
    R = build_residual(p, np.concatenate([Xp, Xm]))
    Rp, Rm = R[: B * P], R[B * P:]
    Jt = ((Rp - Rm) / (2 * h)).reshape(B, P, -1)
    return Jt.transpose(0, 2, 1)


@dataclass
class LMResult:
    x: np.ndarray
    residual: float
    success: bool
    iterations: int
    status: str


def solve_lm_batch(p: SolveProblem, X0, max_iter: int = 500, tol: float = SUCCESS_TOL,
                   h: float = FD_STEP) -> List[LMResult]:
    """Levenberg-Marquardt on every row of X0 at once.

    A row stops when its residual norm drops below `tol` (success), when its
    damping explodes, or when its cost falls by less than STALL_GAIN over
    STALL_WINDOW iterations; rows that exhaust
    `max_iter` report failure with their best point.
    """
    X = np.array(X0, dtype=float, copy=True)
    B, P = X.shape
    r = build_residual(p, X)
    cost = np.linalg.norm(r, axis=1)
    lam = np.full(B, 1e-3)
    # damping scale: running max of diag(J^T J) per row (MINPACK); a bare diagonal
    # shrinks with a coordinate and then dominates the step on underdetermined systems
    dmax = np.zeros((B, P))
    iters = np.zeros(B, dtype=int)
    # cost history for the window-based stall test
    hist = [cost.copy()]
    status = np.array(["running"] * B, dtype=object)
    status[cost < tol] = "converged"
    for it in range(max_iter):
        act = np.flatnonzero(status == "running")
        if act.size == 0:
            break
        Xa, ra = X[act], r[act]
        Jm = jacobian(p, Xa, h)
        g = np.einsum("bmp,bm->bp", Jm, ra)
        A = np.einsum("bmp,bmq->bpq", Jm, Jm)
        dmax[act] = np.maximum(dmax[act], np.einsum("bpp->bp", A))
        dA = dmax[act]
        scale = np.maximum(dA, 1e-12 * (dA.max(axis=1, keepdims=True) + 1e-30))
        M = A + lam[act, None, None] * (scale[:, :, None] * np.eye(P)[None])
        try:
            step = -np.linalg.solve(M, g[..., None])[..., 0]
        except np.linalg.LinAlgError:
            step = -np.stack([np.linalg.lstsq(Mi, gi, rcond=None)[0] for Mi, gi in zip(M, g)])
        Xn = Xa + step
        rn = build_residual(p, Xn)
        cn = np.linalg.norm(rn, axis=1)
        good = cn < cost[act]
        gi = act[good]
        X[gi], r[gi], = Xn[good], rn[good]
        cost[gi] = cn[good]
        lam[gi] = np.maximum(lam[gi] / 3.0, 1e-15)
        bi = act[~good]
        lam[bi] *= 4.0
        iters[act] += 1
        hist.append(cost.copy())
        status[act[cost[act] < tol]] = "converged"
        still = act[status[act] == "running"]
        status[still[lam[still] > 1e14]] = "stalled"
        if len(hist) > STALL_WINDOW:
            old = hist[-STALL_WINDOW - 1]
            slow = still[cost[still] > (1.0 - STALL_GAIN) * old[still]]
            status[slow] = "stalled"
    status[status == "running"] = "max_iter"
    return [LMResult(X[b].copy(), float(cost[b]), bool(cost[b] < tol), int(iters[b]), str(status[b]))
            for b in range(B)]


def solve_lm(p: SolveProblem, x0, max_iter: int = 500, tol: float = SUCCESS_TOL) -> LMResult:
    return solve_lm_batch(p, np.atleast_2d(x0), max_iter, tol)[0]


def random_starts(p: SolveProblem, k: int, rng: np.random.Generator) -> np.ndarray:
    """Centered normal starts; complex entries get unit-variance parts."""
    return p.start_scale * rng.normal(size=(k, p.dim))


def multistart(p: SolveProblem, starts: int, seed: int = 0, max_iter: int = 500,
               tol: float = SUCCESS_TOL, chunk: int = 256) -> dict:
    """Batched LM from `starts` random points, split evenly over the sign combinations.

    Every result records the sign combination and the pinned problem it was
    solved in, so converged points can be re-evaluated and verified.
    """
    rng = np.random.default_rng(seed)
    combos = p.sign_combinations() if p.signs else [{}]
    per = [starts // len(combos) + (1 if k < starts % len(combos) else 0) for k in range(len(combos))]
    results, records = [], []
    for combo, k in zip(combos, per):
        q = p.pin(**combo) if combo else p
        X0 = random_starts(q, k, rng)
        for a in range(0, k, chunk):
            for r in solve_lm_batch(q, X0[a:a + chunk], max_iter, tol):
                results.append(r)
                records.append({"signs": combo, "problem": q, "result": r})
    sols = [rec for rec in records if rec["result"].success]
    best = min((r.residual for r in results), default=None)
    log.info("%s: %d/%d starts converged, best residual %s", p.name, len(sols), starts, best)
    return {"problem": p.name, "seed": seed, "starts": starts, "records": records,
            "solutions": sols, "best_residual": best}


def cluster_solutions(sols: Sequence[dict], tol: float = 1e-6) -> Tuple[List[int], List[int]]:
    """Gauge clustering of multistart records; uses the problem's invariant map."""
    invs = []
    for rec in sols:
        q = rec["problem"]
        d = q.point(rec["result"].x)
        if q.invariants is not None:
            v = q.invariants(d)
        else:
            v = gauge_invariants(d["C"], d.get("sig"), d.get("J"))
        signs = [rec["signs"][k] for k in sorted(rec["signs"])]
        invs.append(np.concatenate([np.asarray(v, dtype=complex).ravel(), np.asarray(signs, dtype=complex)]))
    return dedup_gauge(invs, tol)


# continuation ---------------------------------------------------------------------

class ContinuationError(RuntimeError):
    pass


def _null_direction(Jm, e, rank_tol=1e-7):
    """Unit tangent in the numerical kernel of Jm with the largest overlap with e."""
    U, s, Vt = np.linalg.svd(Jm)
    P = Vt.shape[0]
    smax = s[0] if s.size else 1.0
    rank = int(np.sum(s > rank_tol * max(smax, 1.0)))
    kernel = Vt[rank:] if rank < P else np.zeros((0, P))
    if kernel.shape[0] == 0:
        return None, rank, s
    t = kernel.T @ (kernel @ e)
    nt = np.linalg.norm(t)
    if nt < 1e-12:
        t = kernel[0]
        nt = np.linalg.norm(t)
    return t / nt, rank, s


def continue_family(p: SolveProblem, x0, slot: str, steps: int = 40, ds: float = 0.05,
                    tol: float = 1e-10, close_tol: float = None, direction: int = 1) -> dict:
    """Pseudo-arclength continuation from a converged point.

    The tangent is the kernel direction of the Jacobian closest to the chosen
    slot; each corrector solves F(x) = 0 together with t.(x - x_pred) = 0.
    Stops at `steps` points, on a corrector failure, on a jump in kernel
    dimension (rank drop), or when the path closes on itself.
    """
    x = np.asarray(x0, dtype=float).copy()
    r0 = float(np.linalg.norm(build_residual(p, x)))
    if r0 > 1e-9:
        raise ContinuationError(f"starting point residual {r0:.2e} exceeds 1e-9")
    e = np.zeros(p.dim)
    off = 0
    found = False
    for s in p.free_slots:
        if s.name == slot:
            e[off] = 1.0
            found = True
            break
        off += s.nreal
    if not found:
        raise ConfigurationError(f"unknown or pinned continuation slot {slot!r}")
    e *= direction
    path = [x.copy()]
    residuals = [r0]
    t_prev = None
    kdim0 = None
    status = "completed"
    for k in range(steps):
        Jm = jacobian(p, x[None])[0]
        t, rank, sv = _null_direction(Jm, e if t_prev is None else t_prev)
        kdim = p.dim - rank
        if kdim0 is None:
            kdim0 = kdim
        if t is None or kdim != kdim0:
            status = f"rank change: kernel dimension {kdim0} -> {kdim} at step {k}"
            break
        if t_prev is not None and t @ t_prev < 0:
            t = -t
        xp = x + ds * t
        xc = xp.copy()
        ok = False
        for _ in range(30):
            F = build_residual(p, xc)
            g = np.concatenate([F, [t @ (xc - xp)]])
            if np.linalg.norm(F) < tol:
                ok = True
                break
            Ja = np.vstack([jacobian(p, xc[None])[0], t[None]])
            dx = np.linalg.lstsq(Ja, -g, rcond=None)[0]
            xc = xc + dx
        if not ok:
            status = f"corrector failed at step {k} (residual {np.linalg.norm(build_residual(p, xc)):.2e})"
            break
        x, t_prev = xc, t
        path.append(x.copy())
        residuals.append(float(np.linalg.norm(build_residual(p, x))))
        if close_tol is not None and k > 2 and np.linalg.norm(x - path[0]) < close_tol:
            status = "closed"
            break
    return {"path": np.array(path), "residuals": np.array(residuals), "status": status,
            "kernel_dim": kdim0}


# gauge deduplication ----------------------------------------------------------------

def gauge_invariants(C, sigma_s=None, J=None, signs=()) -> np.ndarray:
    """Invariants under C -> uCu^-1, sigma_S -> u sigma_S u^-1, J -> conj(u) J u^-1, u unitary."""
    C = np.asarray(C)
    inv = [np.trace(C[0]), np.trace(C[1]), np.linalg.det(C[0]), np.linalg.det(C[1]),
           np.trace(C[0] @ C[1]), np.linalg.det(C[0] @ C[1] - C[1] @ C[0])]
    if sigma_s is not None:
        sig = np.asarray(sigma_s)
        for i in range(sig.shape[0]):
            for j in range(sig.shape[1]):
                inv += [np.trace(sig[i, j]), np.linalg.det(sig[i, j]), np.trace(sig[i, j] @ C[0]),
                        np.trace(sig[i, j] @ C[1])]
    if J is not None:
        J = np.asarray(J)
        P = J.conj().T @ J  # conj(u) J u^-1 with u unitary sends P -> u P u^-1
        inv += [np.trace(P), np.linalg.det(P), np.trace(P @ C[0]), np.trace(P @ C[1]),
                np.trace(P @ C[0] @ C[1])]
    inv += [complex(s) for s in signs]
    return np.array(inv, dtype=complex)


def dedup_gauge(invariants: Sequence[np.ndarray], tol: float = 1e-6) -> Tuple[List[int], List[int]]:
    """Greedy clustering; returns (cluster id per item, representative indices)."""
    reps: List[int] = []
    labels: List[int] = []
    for k, v in enumerate(invariants):
        v = np.asarray(v)
        for c, r in enumerate(reps):
            w = np.asarray(invariants[r])
            if v.shape == w.shape and np.max(np.abs(v - w) / (1.0 + np.abs(w))) < tol:
                labels.append(c)
                break
        else:
            labels.append(len(reps))
            reps.append(k)
    return labels, reps
