"""Deterministic optimization over probability simplices and transportation polytopes.

Candidate distributions live on exact rational grids (entries are multiples
of 1/K).  A search probes the full grid at the coarse resolution, re-grids a
small box around the incumbent at doubled resolutions, then runs a
coordinate mass-transfer descent at the finest resolution.  Marginal
constraints are enforced by construction: only tables with the pinned
marginals are ever generated, and every descent move preserves them.

Objectives and feasibility predicates are *batch* functions: they receive an
array of shape ``(N, *joint_shape)`` and return ``N`` values / booleans.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

from .info import Alphabet, ContractError, JointDist, ProbDist

# Inequality constraints are checked with this slack.
SLACK = 1e-9


@dataclass(frozen=True)
class GridSpec:
    k: int = 20
    refine_levels: int = 2
    local_steps: int = 200
    tolerance: float = 1e-9
    max_probes: int = 250_000
    # budget for the 4-axis conditional problems nested inside a triple search
    inner_max_probes: int = 20_000

    def __post_init__(self):
        if self.k < 2:
            raise ContractError("grid denominator k must be >= 2")
        if self.refine_levels < 0 or self.local_steps < 0:
            raise ContractError("refine_levels and local_steps must be nonnegative")
        if not self.tolerance > 0:
            raise ContractError("tolerance must be positive")

    @property
    def finest(self) -> int:
        return self.k * 2 ** self.refine_levels

    def describe(self) -> str:
        return f"k={self.k};refine={self.refine_levels};steps={self.local_steps};tol={self.tolerance:g}"

    def nested(self) -> "GridSpec":
        return GridSpec(self.k, self.refine_levels, self.local_steps, self.tolerance,
                        min(self.max_probes, self.inner_max_probes), self.inner_max_probes)


@dataclass
class OptResult:
    value: float
    witness: Optional[JointDist]
    probes: int
    feasible: bool
    resolution: int = 0
    state: Optional[np.ndarray] = field(default=None, repr=False)


class InconsistentMarginsError(ContractError):
    """Rounded target marginals do not share a common total."""


class _TooMany(Exception):
    pass


def round_counts(p, K: int) -> np.ndarray:
    """Nearest integer vector to K*p with total exactly K (largest remainder, ties to lower index)."""
    p = np.asarray(getattr(p, "mass", p), dtype=float)
    raw = K * p
    base = np.floor(raw + 1e-12).astype(np.int64)
    short = K - int(base.sum())
    if short > 0:
        frac = raw - base
        order = sorted(range(len(p)), key=lambda i: (-frac[i], i))
        for i in order[:short]:
            base[i] += 1
    elif short < 0:
        frac = raw - base
        order = sorted((i for i in range(len(p)) if base[i] > 0), key=lambda i: (frac[i], i))
        for i in order[:-short]:
            base[i] -= 1
    return base


def _compositions(K: int, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """All integer vectors v with lo <= v <= hi and sum K, ascending lexicographic."""
    L = len(lo)
    out = []
    vals = [0] * L
    hi_after = [int(hi[i + 1:].sum()) for i in range(L)]
    lo_after = [int(lo[i + 1:].sum()) for i in range(L)]

    def rec(i, rem):
        if i == L - 1:
            if lo[i] <= rem <= hi[i]:
                vals[i] = rem
                out.append(list(vals))
            return
        vmin = max(int(lo[i]), rem - hi_after[i])
        vmax = min(int(hi[i]), rem - lo_after[i])
        for v in range(vmin, vmax + 1):
            vals[i] = v
            rec(i + 1, rem - v)

    rec(0, K)
    return np.array(out, dtype=np.int64).reshape(-1, L)


def _pinned_tables(shape: tuple, targets: Sequence[np.ndarray], lo: np.ndarray, hi: np.ndarray,
                   limit: Optional[int] = None, count_only: bool = False):
    """Integer tables with prescribed sums along every axis slice, within [lo, hi]."""
    cells = list(np.ndindex(*shape))
    P = len(cells)
    d = len(shape)
    lo = lo.ravel()
    hi = hi.ravel()
    hi_after = np.zeros((P, d), dtype=np.int64)
    lo_after = np.zeros((P, d), dtype=np.int64)
    for p in range(P):
        for a in range(d):
            same = [q for q in range(p + 1, P) if cells[q][a] == cells[p][a]]
            hi_after[p, a] = hi[same].sum() if same else 0
            lo_after[p, a] = lo[same].sum() if same else 0
    rem = [np.array(t, dtype=np.int64).copy() for t in targets]
    vals = [0] * P
    out = []
    n_found = [0]

    def rec(p):
        if p == P:
            n_found[0] += 1
            if limit is not None and n_found[0] > limit:
                raise _TooMany
            if not count_only:
                out.append(list(vals))
            return
        c = cells[p]
        vmin, vmax = int(lo[p]), int(hi[p])
        for a in range(d):
            r = int(rem[a][c[a]])
            vmax = min(vmax, r - int(lo_after[p, a]))
            vmin = max(vmin, r - int(hi_after[p, a]))
        for v in range(vmin, vmax + 1):
            vals[p] = v
            for a in range(d):
                rem[a][c[a]] -= v
            rec(p + 1)
            for a in range(d):
                rem[a][c[a]] += v

    rec(0)
    if count_only:
        return n_found[0]
    return np.array(out, dtype=np.int64).reshape((-1,) + tuple(shape))


class PinnedDomain:
    """Tables whose one-dimensional marginals are pinned (2-axis: a transportation polytope)."""

    def __init__(self, margins: Sequence, axes: Optional[Sequence[Alphabet]] = None):
        self.margins = [np.asarray(getattr(m, "mass", m), dtype=float) for m in margins]
        self.shape = tuple(len(m) for m in self.margins)
        if axes is None:
            axes = [getattr(m, "alphabet", Alphabet(len(mm))) for m, mm in zip(margins, self.margins)]
        self.axes = tuple(axes)
        self._moves = None

    def targets(self, K: int) -> list[np.ndarray]:
        t = [round_counts(m, K) for m in self.margins]
        totals = {int(x.sum()) for x in t}
        if len(totals) != 1:
            raise InconsistentMarginsError(f"rounded marginals have totals {sorted(totals)}")
        return t

    def _bounds(self, K, box):
        if box is None:
            return np.zeros(self.shape, np.int64), np.full(self.shape, K, np.int64)
        return box

    def count(self, K: int, box=None, limit: Optional[int] = None) -> int:
        lo, hi = self._bounds(K, box)
        try:
            return _pinned_tables(self.shape, self.targets(K), lo, hi, limit=limit, count_only=True)
        except _TooMany:
            return limit + 1

    def states(self, K: int, box=None) -> np.ndarray:
        lo, hi = self._bounds(K, box)
        return _pinned_tables(self.shape, self.targets(K), lo, hi)

    def joints(self, states: np.ndarray, K: int) -> np.ndarray:
        return states / K

    @property
    def state_shape(self):
        return self.shape

    def moves(self) -> np.ndarray:
        """Smallest marginal-preserving exchanges: +c1 +c2 -c3 -c4 with matching axis multisets."""
        if self._moves is None:
            cells = list(np.ndindex(*self.shape))
            d = len(self.shape)
            found = set()
            for c1, c2 in itertools.combinations(cells, 2):
                for split in itertools.product((0, 1), repeat=d):
                    c3 = tuple(c1[a] if s == 0 else c2[a] for a, s in enumerate(split))
                    c4 = tuple(c2[a] if s == 0 else c1[a] for a, s in enumerate(split))
                    if {c3, c4} == {c1, c2}:
                        continue
                    mv = np.zeros(self.shape, np.int64)
                    mv[c1] += 1
                    mv[c2] += 1
                    mv[c3] -= 1
                    mv[c4] -= 1
                    for sign in (1, -1):
                        found.add(tuple((sign * mv).ravel()))
            found.discard(tuple([0] * int(np.prod(self.shape))))
            self._moves = np.array(sorted(found), dtype=np.int64).reshape((-1,) + self.shape)
        return self._moves

    def witness(self, state: np.ndarray, K: int) -> JointDist:
        return JointDist(self.axes, state / K)


class ConditionalDomain:
    """Joints base(s) * V(y|s) with ``base`` fixed and the kernel V free on its simplex rows."""

    def __init__(self, base: np.ndarray, out_size: int, axes: Optional[Sequence[Alphabet]] = None):
        self.base = np.asarray(getattr(base, "mass", base), dtype=float)
        self.out_size = out_size
        self.rows = self.base.reshape(-1)
        self.active = np.flatnonzero(self.rows > 0)
        self.shape = self.base.shape + (out_size,)
        if axes is None:
            axes = tuple(Alphabet(s) for s in self.shape)
        self.axes = tuple(axes)
        self._moves = None

    @property
    def state_shape(self):
        return (self.rows.size, self.out_size)

    def _row_options(self, K, box):
        R, Y = self.state_shape
        fixed = round_counts(np.full(Y, 1.0 / Y), K)
        opts = []
        for r in range(R):
            if r not in set(self.active.tolist()):
                opts.append(fixed[None, :])
                continue
            if box is None:
                lo, hi = np.zeros(Y, np.int64), np.full(Y, K, np.int64)
            else:
                lo, hi = box[0][r], box[1][r]
            opts.append(_compositions(K, lo, hi))
        return opts

    def count(self, K: int, box=None, limit: Optional[int] = None) -> int:
        total = 1
        for o in self._row_options(K, box):
            total *= len(o)
        return total

    def states(self, K: int, box=None) -> np.ndarray:
        opts = self._row_options(K, box)
        sizes = [len(o) for o in opts]
        if 0 in sizes:
            return np.zeros((0,) + self.state_shape, np.int64)
        idx = np.indices(sizes).reshape(len(sizes), -1).T
        return np.stack([opts[r][idx[:, r]] for r in range(len(opts))], axis=1)

    def joints(self, states: np.ndarray, K: int) -> np.ndarray:
        cond = states / K
        j = self.rows[None, :, None] * cond
        return j.reshape((states.shape[0],) + self.shape)

    def moves(self) -> np.ndarray:
        if self._moves is None:
            R, Y = self.state_shape
            mv = []
            for r in self.active:
                for a in range(Y):
                    for b in range(Y):
                        if a != b:
                            m = np.zeros((R, Y), np.int64)
                            m[r, a] -= 1
                            m[r, b] += 1
                            mv.append(m)
            self._moves = np.array(mv, dtype=np.int64).reshape((-1, R, Y))
        return self._moves

    def witness(self, state: np.ndarray, K: int) -> JointDist:
        return JointDist(self.axes, self.joints(state[None], K)[0])


class _Evaluator:
    def __init__(self, objective, feasible):
        self.objective = objective
        self.feasible = feasible
        self.probes = 0
        self.any_feasible = False

    def __call__(self, joints: np.ndarray) -> np.ndarray:
        n = joints.shape[0]
        self.probes += n
        vals = np.full(n, np.inf)
        if n == 0:
            return vals
        mask = np.ones(n, bool) if self.feasible is None else np.asarray(self.feasible(joints), bool)
        if mask.any():
            self.any_feasible = True
            v = np.asarray(self.objective(joints[mask]), dtype=float)
            vals[mask] = np.where(np.isnan(v), np.inf, v)
        self.last_mask = mask
        return vals


def _box(state, K, radius):
    return np.maximum(state - radius, 0), np.minimum(state + radius, K)


def minimize(objective: Callable, feasible: Optional[Callable], domain, grid: GridSpec = GridSpec()) -> OptResult:
    """Minimize a batch objective over ``domain`` subject to a batch predicate.

    Points where the predicate fails are never passed to the objective.  The
    result is infeasible (value +inf, no witness) only when no probe at any
    resolution satisfied the predicate.
    """
    ev = _Evaluator(objective, feasible)
    budget = grid.max_probes
    K = grid.k
    while K > 2 and domain.count(K, None, limit=budget) > budget:
        K = max(2, K // 2)

    best = {"state": None, "val": math.inf, "K": K}

    def consider(states, res):
        if states.shape[0] == 0:
            return
        vals = ev(domain.joints(states, res))
        mask = ev.last_mask
        if not mask.any():
            return
        i = int(np.argmin(np.where(mask, vals, np.inf)))
        if best["state"] is None or vals[i] < best["val"]:
            best.update(state=states[i], val=float(vals[i]), K=res)

    consider(domain.states(K), K)
    while K < grid.finest:
        K2 = K * 2
        if best["state"] is not None:
            s = best["state"] * (K2 // best["K"])
            for radius in (2, 1):
                box = _box(s, K2, radius)
                if domain.count(K2, box, limit=budget) <= budget:
                    consider(domain.states(K2, box), K2)
                    break
            if best["K"] != K2:
                best.update(state=s, K=K2)
        elif domain.count(K2, None, limit=budget) <= budget:
            consider(domain.states(K2), K2)
        K = K2

    if best["state"] is None:
        return OptResult(math.inf, None, ev.probes, False, K, None)

    K = best["K"]
    moves = domain.moves()
    state, val = best["state"], best["val"]
    for _ in range(grid.local_steps):
        if moves.shape[0] == 0 or not np.isfinite(val):
            break
        cand = state[None] + moves
        ok = np.all((cand >= 0) & (cand <= K), axis=tuple(range(1, cand.ndim)))
        cand = cand[ok]
        if cand.shape[0] == 0:
            break
        vals = ev(domain.joints(cand, K))
        i = int(np.argmin(vals))
        if vals[i] < val - grid.tolerance:
            state, val = cand[i], float(vals[i])
        else:
            break
    return OptResult(val, domain.witness(state, K), ev.probes, True, K, state)


def maximize(objective: Callable, feasible: Optional[Callable], domain, grid: GridSpec = GridSpec()) -> OptResult:
    """Mirror of :func:`minimize`; an infeasible problem reports value nan."""
    res = minimize(lambda j: -np.asarray(objective(j), dtype=float), feasible, domain, grid)
    res.value = -res.value if res.feasible else math.nan
    return res


def line_polish(start: np.ndarray, objective: Callable, constraint: Callable, moves: np.ndarray,
                rounds: int = 25, points: int = 33, bisect: int = 40) -> tuple[np.ndarray, float]:
    """Continuous ascent from a grid point along marginal-preserving directions.

    ``constraint`` must be convex along every line (e.g. a mutual information
    with both marginals fixed), so its sublevel set on each ray is an interval
    whose end is found by bisection.  ``objective`` is then scanned on that
    interval.  Returns the improved point and its value (never worse).
    """
    cur = np.asarray(start, dtype=float)
    val = float(objective(cur[None])[0])
    d = moves.astype(float)
    for _ in range(rounds):
        neg = d < 0
        with np.errstate(divide="ignore", invalid="ignore"):
            room = np.where(neg, cur[None] / np.where(neg, -d, 1.0), np.inf)
        tmax = room.reshape(len(d), -1).min(axis=1)
        keep = np.isfinite(tmax) & (tmax > 0)
        if not keep.any():
            break
        dd, tmax = d[keep], tmax[keep]
        ext = (slice(None),) + (None,) * cur.ndim
        ok = constraint(np.clip(cur[None] + tmax[ext] * dd, 0, None))
        lo = np.where(ok, tmax, 0.0)
        hi = tmax.copy()
        for _ in range(bisect):
            mid = (lo + hi) / 2
            inside = constraint(np.clip(cur[None] + mid[ext] * dd, 0, None))
            lo = np.where(~ok & inside, mid, lo)
            hi = np.where(~ok & ~inside, mid, hi)
        ts = lo[:, None] * np.linspace(0.0, 1.0, points)[None]
        cand = np.clip(cur[None, None] + ts[(...,) + (None,) * cur.ndim] * dd[:, None], 0, None)
        cand = cand.reshape((-1,) + cur.shape)
        vals = np.where(constraint(cand), np.asarray(objective(cand), dtype=float), -np.inf)
        vals = np.where(np.isnan(vals), -np.inf, vals)
        i = int(np.argmax(vals))
        if vals[i] > val + 1e-13:
            cur, val = cand[i], float(vals[i])
        else:
            break
    return cur, val


def convex_polish(start: np.ndarray, objective: Callable, moves: np.ndarray, rounds: int = 40,
                  tol: float = 1e-13) -> tuple[np.ndarray, float]:
    """Continuous descent for an objective convex on the domain.

    Golden-section line searches along each move and each pairwise sum of
    moves (so that a kink can be followed), repeated until a full sweep
    gains less than ``tol``.  Returns the improved point and its value.
    """
    cur = np.asarray(start, dtype=float)
    f = lambda x: float(np.asarray(objective(x[None]), dtype=float)[0])
    val = f(cur)
    base = [m.astype(float) for m in moves]
    dirs = base + [a + b for a, b in itertools.combinations(base, 2) if np.any(a + b)]
    for _ in range(rounds):
        start_val = val
        for d in dirs:
            neg, pos = d < 0, d > 0
            hi = np.min(cur[neg] / -d[neg]) if neg.any() else 0.0
            lo = -np.min(cur[pos] / d[pos]) if pos.any() else 0.0
            if hi - lo <= 0:
                continue
            line = lambda t: f(np.clip(cur + t * d, 0, None))
            t, v = golden_section_1d(line, 1e-12 * max(hi - lo, 1.0), lo, hi)
            if v < val:
                cur, val = np.clip(cur + t * d, 0, None), v
        if start_val - val < tol:
            break
    return cur, val


def enumerate_pinned_joints(p_a, p_b, k: int) -> Iterator[JointDist]:
    """Every joint on the 1/k grid whose marginals equal the rounded (p_a, p_b)."""
    if k < 2:
        raise ContractError("k must be >= 2")
    dom = PinnedDomain([p_a, p_b])
    for s in dom.states(k):
        yield dom.witness(s, k)


def golden_section_1d(f: Callable[[float], float], tol: float = 1e-8, lo: float = 0.0,
                      hi: float = 1.0) -> tuple[float, float]:
    """Golden-section minimization of a scalar function on [lo, hi]."""
    invphi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = (a + b) / 2
    cands = [(f(x), x), (f(lo), lo), (f(hi), hi)]
    fx, x = min(cands, key=lambda t: t[0])
    return x, fx
