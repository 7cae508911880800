"""Single-letter error exponents of fixed-composition random codes under the GLD.

Every exponent is a nested variational problem: an outer search over the
pair (or triple) type of codewords, and an inner search over the conditional
type of the channel output.  Both levels run on :mod:`explab.opt` grids; the
values reported are therefore upper bounds of the exact infima, converging as
the grid is refined.

Conventions: X is the transmitted codeword, X' a competing codeword, X~ a
second competitor (list decoding), Y the channel output.  Joint arrays are
indexed in that order with Y last.
"""
from __future__ import annotations

import functools
import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .info import (Alphabet, Channel, ContractError, JointDist, ProbDist, SIMPLEX_TOL, batch_divergence,
                   batch_entropy, batch_kernel_divergence, batch_mi)
from .metrics import DecodingMetric
from .opt import SLACK, ConditionalDomain, GridSpec, OptResult, PinnedDomain, convex_polish, line_polish, maximize, minimize

# Triples whose pair relaxation exceeds the incumbent by this much are skipped.
PRUNE_MARGIN = 1e-2

KINDS = ("trc", "ex", "rc", "trc-ml", "smmi", "list2", "ue")


@dataclass
class ExponentResult:
    value: float
    witness: Optional[JointDist]
    inner_witness: Optional[JointDist]
    grid: GridSpec
    feasible: bool
    probes: int = 0
    rate: float = 0.0
    # value before truncation at zero (see _as_result)
    raw: float = math.nan


@dataclass
class ExponentCurve:
    kind: str
    points: list  # of (rate, ExponentResult)
    problem_hash: str

    def __post_init__(self):
        rates = [r for r, _ in self.points]
        if any(b <= a for a, b in zip(rates, rates[1:])):
            raise ContractError("curve rates must be strictly increasing")

    @property
    def rates(self):
        return [r for r, _ in self.points]

    @property
    def values(self):
        return [res.value for _, res in self.points]


def _check_rate(R):
    if not (R >= 0 and np.isfinite(R)):
        raise ContractError(f"rate must be a finite nonnegative number, got {R!r}")
    return float(R)


def _fix_composition(q_x, w: Channel) -> ProbDist:
    q = q_x if isinstance(q_x, ProbDist) else ProbDist.of(q_x)
    if len(q) != w.input.size:
        raise ContractError("composition is not on the channel input alphabet")
    return ProbDist(w.input, q.mass)


def _round_rows(q: np.ndarray, K: int) -> np.ndarray:
    """Vectorized largest-remainder rounding of probability rows to multiples of 1/K."""
    raw = K * q
    base = np.floor(raw + 1e-12).astype(np.int64)
    short = K - base.sum(axis=-1, keepdims=True)
    frac = raw - base
    ranks = np.argsort(np.argsort(-frac, axis=-1, kind="stable"), axis=-1, kind="stable")
    return base + (ranks < short)


class _Context:
    """Caches shared by every exponent evaluated for one (q_X, W, g, grid) problem."""

    def __init__(self, q_x: ProbDist, w: Channel, m: DecodingMetric, grid: GridSpec):
        self.q_x, self.w, self.m, self.grid = q_x, w, m, grid
        self.sup_cache: dict = {}
        self.inner_cache: dict = {}
        self.ref = m if m.kind != "ml_limit" else DecodingMetric.ml_limit(w)
        if m.kind != "mmi":
            tbl = m.table()
            if tbl.shape != w.w.shape:
                raise ContractError("metric alphabets do not match the channel")

    # g on a batch of X-by-Y joints; the ML limit is scored by ln W
    def g(self, mass_xy):
        return self.m.batch(mass_xy)

    def coupling_sup(self, which: str, R: float, q_y: np.ndarray) -> np.ndarray:
        """Batch of sup over couplings of (q_X, q_Y) with I <= R.

        which = "alpha": sup [g - I] + R (finite metrics)
        which = "a":     sup g          (ML limit and deterministic list decoding)
        """
        K = self.grid.finest
        keys = _round_rows(np.atleast_2d(q_y), K)
        uniq, inv = np.unique(keys, axis=0, return_inverse=True)
        vals = np.empty(len(uniq))
        for i, row in enumerate(uniq):
            key = (which, R, tuple(row.tolist()))
            if key not in self.sup_cache:
                self.sup_cache[key] = self._coupling_sup(which, R, row / K)
            vals[i] = self.sup_cache[key]
        return vals[np.asarray(inv).reshape(-1)]

    def _coupling_sup(self, which, R, q_y):
        dom = PinnedDomain([self.q_x.mass, q_y])
        mi = lambda J: batch_mi(J, [0], [1], 2)
        if which == "alpha":
            obj = lambda J: self.g(J) - mi(J)
        else:
            obj = self.g
        if R == 0:
            # only the independent coupling is feasible
            return float(self.g(np.outer(self.q_x.mass, q_y)[None])[0])
        feas = lambda J: mi(J) <= R + SLACK
        res = maximize(obj, feas, dom, self.grid)
        best = res.value if res.feasible else -math.inf
        # the product coupling is always feasible but may sit off the grid
        starts = [np.outer(self.q_x.mass, q_y)]
        if res.feasible:
            starts.append(res.witness.mass)
        exact = lambda J: mi(J) <= R
        for s0 in starts:
            _, v = line_polish(s0, obj, exact, dom.moves())
            best = max(best, v)
        return best + (R if which == "alpha" else 0.0)

    def augmented_sup(self, which, R, q_y, *marginals_xy):
        """coupling_sup, raised to cover the probe's own feasible couplings exactly."""
        val = self.coupling_sup(which, R, q_y)
        for mxy in marginals_xy:
            i = batch_mi(mxy, [0], [1], 2)
            g = self.g(mxy)
            cand = g - i + R if which == "alpha" else g
            val = np.maximum(val, np.where(i <= R + SLACK, cand, -np.inf))
        return val


@functools.lru_cache(maxsize=64)
def _context(q_x: ProbDist, w: Channel, m: DecodingMetric, grid: GridSpec) -> _Context:
    return _Context(q_x, w, m, grid)


def _ctx(q_x, w, m, grid) -> _Context:
    q_x = _fix_composition(q_x, w)
    return _context(q_x, w, m, grid)


def _as_result(res: OptResult, grid: GridSpec, R: float, inner=None, truncate: bool = False) -> ExponentResult:
    """Wrap an outer optimum.

    With ``truncate`` the value is replaced by max(value, 0): the bounded
    quantity is a probability, so a union bound may always be cut at one.
    This only bites when exact score ties make the union overcount.
    """
    value = res.value if res.feasible else math.inf
    feasible = bool(res.feasible and np.isfinite(value))
    if not feasible:
        return ExponentResult(math.inf, None, None, grid, False, res.probes, R, math.inf)
    out = max(value, 0.0) if truncate else value
    return ExponentResult(out, res.witness, inner, grid, True, res.probes, R, value)


def _with_product(res: OptResult, objective, product: np.ndarray, axes) -> OptResult:
    """Also score the exact independent coupling, which is always feasible but may be off the grid."""
    v = float(np.asarray(objective(product[None]), dtype=float)[0])
    if np.isnan(v):
        v = math.inf
    if res.feasible and res.value <= v:
        return res
    if not res.feasible or v < res.value:
        return OptResult(v, JointDist(axes, product), res.probes + 1, True, 0, None)
    return res


def _clip_pos(top, low):
    with np.errstate(invalid="ignore"):
        d = top - low
    return np.where(np.isneginf(top), 0.0, np.maximum(np.nan_to_num(d, nan=0.0, posinf=np.inf), 0.0))


# --- coupling suprema ------------------------------------------------------

def alpha(R: float, q_y, q_x, m: DecodingMetric, grid: GridSpec = GridSpec()) -> float:
    """sup over couplings of (q_X, q_Y) with I <= R of [g - I], plus R."""
    if m.kind == "ml_limit":
        raise ContractError("alpha needs a finite metric; use a_ml for the ML limit")
    R = _check_rate(R)
    w = m.channel or Channel.of(np.full((len(q_x), len(q_y)), 1.0 / len(q_y)))
    ctx = _ctx(q_x, w, m, grid)
    q_y = np.asarray(getattr(q_y, "mass", q_y), dtype=float)
    return float(ctx._coupling_sup("alpha", R, q_y))


def a_ml(R: float, q_y, q_x, w: Channel, grid: GridSpec = GridSpec()) -> float:
    """sup over couplings of (q_X, q_Y) with I <= R of E ln W(Y|X)."""
    R = _check_rate(R)
    ctx = _ctx(q_x, w, DecodingMetric.ml_limit(w), grid)
    q_y = np.asarray(getattr(q_y, "mass", q_y), dtype=float)
    return float(ctx._coupling_sup("a", R, q_y))


# --- inner problems ---------------------------------------------------------

def _pair_cost(J, ctx):
    # D(Q_{Y|X}||W|Q_X) + I(X';Y|X) in one pass
    return batch_kernel_divergence(J, ctx.w.w, 3)


def _gamma_objective(ctx, R):
    def obj(J):
        xy, xpy = J.sum(axis=2), J.sum(axis=1)
        gxy, gxpy = ctx.g(xy), ctx.g(xpy)
        al = ctx.augmented_sup("alpha", R, J.sum(axis=(1, 2)), xy, xpy)
        return _pair_cost(J, ctx) + _clip_pos(np.maximum(gxy, al), gxpy)
    return obj


def _ml_constraint(ctx, R):
    def feas(J):
        xy, xpy = J.sum(axis=2), J.sum(axis=1)
        own = ctx.g(xy)
        comp = ctx.g(xpy)
        a = ctx.augmented_sup("a", R, J.sum(axis=(1, 2)), xy, xpy)
        return comp >= np.maximum(own, a) - SLACK
    return feas


def _leak_objective(ctx):
    return lambda J: _pair_cost(J, ctx)


def _ue_constraint(ctx, R, T):
    def feas(J):
        xy, xpy = J.sum(axis=2), J.sum(axis=1)
        al = ctx.augmented_sup("alpha", R, J.sum(axis=(1, 2)), xy, xpy)
        top = np.maximum(ctx.g(xy), al)
        with np.errstate(invalid="ignore"):
            gap = ctx.g(xpy) - top
        return np.nan_to_num(gap, nan=-np.inf) >= T - SLACK
    return feas


def _inner_pair(ctx: _Context, q_xxp, which: str, R: float, T: float = 0.0) -> OptResult:
    q_xxp = np.asarray(getattr(q_xxp, "mass", q_xxp), dtype=float)
    key = (which, R, T, tuple(np.round(q_xxp.ravel(), 12)))
    hit = ctx.inner_cache.get(key)
    if hit is not None:
        return hit
    X = ctx.w.input
    dom = ConditionalDomain(q_xxp, ctx.w.output.size, axes=(X, X, ctx.w.output))
    if which == "gamma":
        res = minimize(_gamma_objective(ctx, R), None, dom, ctx.grid)
    elif which == "sup_pair":
        res = minimize(_leak_objective(ctx), _ml_constraint(ctx, R), dom, ctx.grid)
    elif which == "smmi":
        def obj(J):
            xy, xpy = J.sum(axis=2), J.sum(axis=1)
            D = batch_divergence(xy, ctx.w.w)
            rev = batch_mi(J, [1], [0], 3, [2])
            top = np.maximum(batch_mi(xy, [0], [1], 2), batch_mi(xpy, [0], [1], 2))
            return D + rev + np.maximum(top - R, 0.0)
        res = minimize(obj, None, dom, ctx.grid)
    elif which == "ue":
        res = minimize(_leak_objective(ctx), _ue_constraint(ctx, R, T), dom, ctx.grid)
    else:
        raise ValueError(which)
    ctx.inner_cache[key] = res
    return res


def _check_pinned(q_joint, q_x: ProbDist):
    mass = np.asarray(getattr(q_joint, "mass", q_joint), dtype=float)
    for a in range(mass.ndim):
        marg = mass.sum(axis=tuple(b for b in range(mass.ndim) if b != a))
        if np.max(np.abs(marg - q_x.mass)) > SIMPLEX_TOL:
            raise ContractError(f"axis {a} marginal {marg.tolist()} differs from the composition")
    return mass


def gamma(q_xxp, R: float, w: Channel, m: DecodingMetric, grid: GridSpec = GridSpec(),
          q_x=None) -> float:
    """inf over Q_{Y|XX'} of D(Q_{Y|X}||W|Q_X) + I(X';Y|X) + [max{g(XY), alpha} - g(X'Y)]_+."""
    R = _check_rate(R)
    mass = np.asarray(getattr(q_xxp, "mass", q_xxp), dtype=float)
    q_x = q_x if q_x is not None else ProbDist.of(mass.sum(axis=1))
    ctx = _ctx(q_x, w, m, grid)
    _check_pinned(mass, ctx.q_x)
    which = "sup_pair" if m.kind == "ml_limit" else "gamma"
    return float(_inner_pair(ctx, mass, which, R).value)


# --- outer problems ----------------------------------------------------------

def _outer_pair(ctx: _Context, cap: float, which: str, gamma_rate: float, offset_rate: Optional[float],
                T: float = 0.0) -> ExponentResult:
    """inf over Q_XX' with pinned marginals and I(X;X') <= cap of inner + [I - offset_rate]."""
    q = ctx.q_x.mass
    dom = PinnedDomain([q, q], axes=(ctx.w.input, ctx.w.input))
    feas = lambda J: batch_mi(J, [0], [1], 2) <= cap + SLACK

    def obj(J):
        inner = np.array([_inner_pair(ctx, j, which, gamma_rate, T).value for j in J])
        if offset_rate is None:
            return inner
        return inner + batch_mi(J, [0], [1], 2) - offset_rate

    res = minimize(obj, feas, dom, ctx.grid)
    res = _with_product(res, obj, np.multiply.outer(q, q), dom.axes)
    inner = None
    if res.feasible and res.witness is not None:
        inner = _inner_pair(ctx, res.witness.mass, which, gamma_rate, T).witness
    return _as_result(res, ctx.grid, gamma_rate if offset_rate is None else offset_rate, inner,
                      truncate=which in ("sup_pair", "ue"))


def e_rc(R: float, q_x, w: Channel, grid: GridSpec = GridSpec()) -> ExponentResult:
    """min over Q_{Y|X} of D(Q_{Y|X}||W|Q_X) + [I(X;Y) - R]_+."""
    R = _check_rate(R)
    q_x = _fix_composition(q_x, w)
    dom = ConditionalDomain(q_x.mass, w.output.size, axes=(w.input, w.output))
    obj = lambda J: batch_divergence(J, w.w) + np.maximum(batch_mi(J, [0], [1], 2) - R, 0.0)
    res = minimize(obj, None, dom, grid)
    # the objective is convex in Q_{Y|X}: finish off the grid
    moves = dom.moves() * dom.rows[None, :, None]
    point, val = convex_polish(res.witness.mass, obj, moves.reshape((-1,) + dom.shape))
    if val < res.value:
        res.value, res.witness = val, JointDist(dom.axes, point)
    return _as_result(res, grid, R, res.witness)


def e_trc(R: float, q_x, w: Channel, m: DecodingMetric, grid: GridSpec = GridSpec()) -> ExponentResult:
    """Typical-random-code exponent: inf over I(X;X') <= 2R of Gamma(Q_XX', R) + I(X;X') - R."""
    R = _check_rate(R)
    if m.kind == "ml_limit":
        return e_trc_ml(R, q_x, w, grid)
    ctx = _ctx(q_x, w, m, grid)
    return _outer_pair(ctx, 2 * R, "gamma", R, R)


def e_ex(R: float, q_x, w: Channel, m: DecodingMetric, grid: GridSpec = GridSpec(),
         gamma_rate: Optional[float] = None) -> ExponentResult:
    """Expurgated exponent of the GLD: inf over I(X;X') <= R of Gamma(Q_XX', R) + I(X;X') - R.

    ``gamma_rate`` overrides the rate argument inside Gamma (default: R).
    With the ML limit, Gamma is replaced by its constrained form.
    """
    R = _check_rate(R)
    gr = R if gamma_rate is None else _check_rate(gamma_rate)
    ctx = _ctx(q_x, w, m, grid)
    which = "sup_pair" if m.kind == "ml_limit" else "gamma"
    return _outer_pair(ctx, R, which, gr, R)


def e_trc_ml(R: float, q_x, w: Channel, grid: GridSpec = GridSpec()) -> ExponentResult:
    """ML-limit TRC exponent: inf over S(R) of D(Q_{Y|X}||W|Q_X) + I(X';X,Y) - R; +inf if S(R) is empty."""
    R = _check_rate(R)
    ctx = _ctx(q_x, w, DecodingMetric.ml_limit(w), grid)
    return _outer_pair(ctx, 2 * R, "sup_pair", R, R)


def e_trc_smmi(R: float, q_x, w: Channel, grid: GridSpec = GridSpec()) -> ExponentResult:
    """Closed form for the stochastic MMI decoder:
    min over I(X;X') <= 2R of D + I(X';X|Y) + [max{I(X;Y), I(X';Y)} - R]_+.
    """
    R = _check_rate(R)
    ctx = _ctx(q_x, w, DecodingMetric.mmi(1.0), grid)
    return _outer_pair(ctx, 2 * R, "smmi", R, None)


# --- list decoding (L = 2) ------------------------------------------------------

def _list_cost(J, ctx, pair_leakage):
    if pair_leakage:
        return batch_divergence(J.sum(axis=(-3, -2)), ctx.w.w) + batch_mi(J, [1], [3], 4, [0])
    return batch_kernel_divergence(J, ctx.w.w, 4)


def _lambda_list_result(ctx: _Context, q3: np.ndarray, R: float, pair_leakage: bool,
                        constrained: bool = True) -> OptResult:
    key = ("list", R, pair_leakage, constrained, tuple(np.round(q3.ravel(), 12)))
    hit = ctx.inner_cache.get(key)
    if hit is not None:
        return hit
    X = ctx.w.input
    dom = ConditionalDomain(q3, ctx.w.output.size, axes=(X, X, X, ctx.w.output))

    def obj(J):
        return _list_cost(J, ctx, pair_leakage)

    def feas(J):
        xy, xpy, xty = J.sum(axis=(2, 3)), J.sum(axis=(1, 3)), J.sum(axis=(1, 2))
        g, gp, gt = ctx.g(xy), ctx.g(xpy), ctx.g(xty)
        a = ctx.augmented_sup("a", R, J.sum(axis=(1, 2, 3)), xy, xpy, xty)
        return (gp >= gt - SLACK) & (gt >= np.maximum(g, a) - SLACK)

    res = minimize(obj, feas if constrained else None, dom, ctx.grid.nested())
    ctx.inner_cache[key] = res
    return res


def lambda_list(q3, R: float, w: Channel, m: DecodingMetric, grid: GridSpec = GridSpec(),
                pair_leakage: bool = False, constrained: bool = True) -> float:
    """inf over Q_{Y|XX'X~} with g(X'Y) >= g(X~Y) >= max{g(XY), a(R,Q_Y)} of the output-type cost.

    The cost is D(Q_{Y|X}||W|Q_X) + I(X',X~;Y|X), the exponent of an output
    sequence landing in the conditional type given all three codewords.
    ``pair_leakage=True`` counts only I(X';Y|X), the leakage of the first competitor.
    """
    R = _check_rate(R)
    mass = np.asarray(getattr(q3, "mass", q3), dtype=float)
    if mass.ndim != 3:
        raise ContractError("lambda_list needs a 3-axis joint")
    ctx = _ctx(ProbDist.of(mass.sum(axis=(1, 2))), w, m, grid)
    _check_pinned(mass, ctx.q_x)
    return float(_lambda_list_result(ctx, mass, R, pair_leakage, constrained).value)


def e_trc_list(R: float, q_x, w: Channel, m: DecodingMetric, grid: GridSpec = GridSpec(),
               pair_leakage: bool = False) -> ExponentResult:
    """TRC list-error exponent for list size 2:
    inf over S(R) of Lambda_L + I(X;X';X~) - 2R, where S(R) bounds every pairwise
    mutual information by 2R and the multi-information by 3R.
    """
    R = _check_rate(R)
    ctx = _ctx(q_x, w, m, grid)
    q = ctx.q_x.mass
    X = w.input
    dom = PinnedDomain([q, q, q], axes=(X, X, X))

    def multi(J):
        h = lambda keep: batch_entropy(J, keep, 3)
        return h([0]) + h([1]) + h([2]) - h([0, 1, 2])

    def feas(J):
        pair = np.maximum.reduce([batch_mi(J, [0], [1], 3), batch_mi(J, [1], [2], 3), batch_mi(J, [0], [2], 3)])
        return (pair <= 2 * R + SLACK) & (multi(J) <= 3 * R + SLACK)

    # Lambda_L is bounded below by the pair problem on (X, X') and on (X, X~):
    # dropping the other competitor relaxes the constraints and the leakage.
    best = [math.inf]

    def obj(J):
        i3 = np.maximum(multi(J), 0.0) - 2 * R
        pair = lambda P: np.array([_inner_pair(ctx, p, "sup_pair", R).value for p in P])
        lb = np.maximum(pair(J.sum(axis=2)), pair(J.sum(axis=1))) + i3
        out = np.full(len(J), np.inf)
        for i in np.argsort(lb, kind="stable"):
            if lb[i] - PRUNE_MARGIN >= best[0]:
                break
            out[i] = _lambda_list_result(ctx, J[i], R, pair_leakage).value + i3[i]
            best[0] = min(best[0], out[i])
        return out

    res = minimize(obj, feas, dom, grid)
    best[0] = math.inf  # the product point must not be pruned against itself
    res = _with_product(res, obj, np.multiply.outer(np.multiply.outer(q, q), q), dom.axes)
    inner = None
    if res.feasible and res.witness is not None:
        inner = _lambda_list_result(ctx, res.witness.mass, R, pair_leakage).witness
    return _as_result(res, grid, R, inner, truncate=True)


# --- erasure / list option ------------------------------------------------------

def lambda_ue(q_xxp, R: float, T: float, w: Channel, m: DecodingMetric, grid: GridSpec = GridSpec(),
              q_x=None) -> float:
    """min over Q_{Y|XX'} with g(X'Y) - max{g(XY), alpha(R,Q_Y)} >= T of D + I(X';Y|X)."""
    if m.kind == "ml_limit":
        raise ContractError("the erasure threshold needs a finite-scale metric, not the ML limit")
    R = _check_rate(R)
    if not np.isfinite(T):
        raise ContractError("threshold must be finite")
    mass = np.asarray(getattr(q_xxp, "mass", q_xxp), dtype=float)
    q_x = q_x if q_x is not None else ProbDist.of(mass.sum(axis=1))
    ctx = _ctx(q_x, w, m, grid)
    _check_pinned(mass, ctx.q_x)
    return float(_inner_pair(ctx, mass, "ue", R, float(T)).value)


def e_trc_ue(R: float, T: float, q_x, w: Channel, m: DecodingMetric, grid: GridSpec = GridSpec()) -> ExponentResult:
    """TRC undetected-error exponent of the erasure/list decoder with threshold T."""
    if m.kind == "ml_limit":
        raise ContractError("the erasure threshold needs a finite-scale metric, not the ML limit")
    R = _check_rate(R)
    if not np.isfinite(T):
        raise ContractError("threshold must be finite")
    ctx = _ctx(q_x, w, m, grid)
    return _outer_pair(ctx, 2 * R, "ue", R, R, float(T))


# --- curves ------------------------------------------------------------------

def problem_hash(kind: str, q_x, w: Channel, m: Optional[DecodingMetric], grid: GridSpec,
                 threshold: Optional[float] = None) -> str:
    desc = {
        "kind": kind,
        "qx": [float(v) for v in np.asarray(getattr(q_x, "mass", q_x), dtype=float)],
        "W": w.w.tolist(),
        "metric": None if m is None else m.describe(),
        "grid": grid.describe(),
        "threshold": threshold,
    }
    blob = json.dumps(desc, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def evaluate(kind: str, R: float, q_x, w: Channel, m: Optional[DecodingMetric], grid: GridSpec,
             threshold: Optional[float] = None) -> ExponentResult:
    if kind == "rc":
        return e_rc(R, q_x, w, grid)
    if kind == "trc-ml":
        return e_trc_ml(R, q_x, w, grid)
    if kind == "smmi":
        return e_trc_smmi(R, q_x, w, grid)
    if m is None:
        raise ContractError(f"kind {kind!r} needs a decoding metric")
    if kind == "trc":
        return e_trc(R, q_x, w, m, grid)
    if kind == "ex":
        return e_ex(R, q_x, w, m, grid)
    if kind == "list2":
        return e_trc_list(R, q_x, w, m, grid)
    if kind == "ue":
        if threshold is None:
            raise ContractError("kind 'ue' needs a threshold")
        return e_trc_ue(R, threshold, q_x, w, m, grid)
    raise ContractError(f"unknown exponent kind {kind!r}")


def _eval_star(args):
    return evaluate(*args)


def curve(kind: str, rates: Sequence[float], q_x, w: Channel, m: Optional[DecodingMetric] = None,
          grid: GridSpec = GridSpec(), threshold: Optional[float] = None,
          workers: Optional[int] = None) -> ExponentCurve:
    """Pointwise evaluation over a strictly increasing rate grid.

    Points may be computed in worker processes (``EXPLAB_THREADS``); results
    are collected in rate order, so the curve does not depend on scheduling.
    """
    rates = [_check_rate(r) for r in rates]
    if any(b <= a for a, b in zip(rates, rates[1:])):
        raise ContractError("rates must be strictly increasing")
    if kind not in KINDS:
        raise ContractError(f"unknown exponent kind {kind!r}")
    q_x = _fix_composition(q_x, w)
    if workers is None:
        workers = int(os.environ.get("EXPLAB_THREADS", "1") or 1)
    jobs = [(kind, r, q_x, w, m, grid, threshold) for r in rates]
    if workers > 1 and len(jobs) > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_eval_star, jobs))
    else:
        results = [_eval_star(j) for j in jobs]
    return ExponentCurve(kind, list(zip(rates, results)), problem_hash(kind, q_x, w, m, grid, threshold))
