"""Property suites run by ``explab verify``.

Each suite returns a SuiteReport; ``ok`` is False as soon as one assertion
fails and ``failure`` then holds the first failing tuple.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import exponents as ex
from .info import Channel, ProbDist, batch_mi
from .metrics import DecodingMetric
from .opt import GridSpec, golden_section_1d
from .sim import Codebook, composition_counts, ensemble_run, error_prob_exact

ORDER_RATES = tuple(round(0.02 + 0.03 * i, 2) for i in range(12))  # 0.02 .. 0.35
TAU = 3e-2


@dataclass
class SuiteReport:
    name: str
    ok: bool = True
    lines: list = field(default_factory=list)
    failure: tuple = ()

    def check(self, cond: bool, *tup):
        if not cond and self.ok:
            self.ok = False
            self.failure = tup
        return cond

    def text(self) -> str:
        head = f"suite {self.name}: {'PASS' if self.ok else 'FAIL'}"
        body = list(self.lines)
        if not self.ok:
            body.append("first failure: " + ", ".join(map(str, self.failure)))
        return "\n".join([head] + body)


def ordering(grid=GridSpec(), rates=ORDER_RATES, w=None) -> SuiteReport:
    """e_rc <= e_trc + tau and e_trc <= e_ex + tau on BSC(0.1), mmi."""
    rep = SuiteReport("ordering")
    w = w or Channel.bsc(0.1)
    q, m = ProbDist.uniform(2), DecodingMetric.mmi(1.0)
    rep.lines.append("R,e_rc,e_trc,e_ex")
    for R in rates:
        rc = ex.e_rc(R, q, w, grid).value
        trc = ex.e_trc(R, q, w, m, grid).value
        exv = ex.e_ex(R, q, w, m, grid).value
        rep.lines.append(f"{R:g},{rc:.6f},{trc:.6f},{exv:.6f}")
        rep.check(rc <= trc + TAU, "rc>trc", R, rc, trc)
        rep.check(trc <= exv + TAU, "trc>ex", R, trc, exv)
    return rep


def alpha_mmi(grid=GridSpec(), count=20, seed=0) -> SuiteReport:
    """|alpha(R, q_Y, q_X, mmi) - R| <= 2e-2 on random triples."""
    rep = SuiteReport("alpha-mmi")
    rng = np.random.default_rng(seed)
    worst = 0.0
    m = DecodingMetric.mmi(1.0)
    for _ in range(count):
        R = float(rng.uniform(0.0, 0.5))
        qy = rng.dirichlet([1.0, 1.0])
        qx = rng.dirichlet([1.0, 1.0])
        a = ex.alpha(R, qy, ProbDist.of(qx), m, grid)
        worst = max(worst, abs(a - R))
        rep.check(abs(a - R) <= 2e-2, R, qy.tolist(), qx.tolist(), a)
    rep.lines.append(f"max |alpha - R| = {worst:.3e}")
    return rep


def smmi_equivalence(grid=GridSpec(), rates=ORDER_RATES) -> SuiteReport:
    rep = SuiteReport("smmi-equivalence")
    w, q, m = Channel.bsc(0.1), ProbDist.uniform(2), DecodingMetric.mmi(1.0)
    rep.lines.append("R,e_trc,e_trc_smmi")
    for R in rates:
        a = ex.e_trc(R, q, w, m, grid).value
        b = ex.e_trc_smmi(R, q, w, grid).value
        rep.lines.append(f"{R:g},{a:.9f},{b:.9f}")
        rep.check(abs(a - b) <= TAU, R, a, b)
    return rep


def relation26(grid=GridSpec(), rates=(0.02, 0.05, 0.08, 0.11, 0.14, 0.17), w=None, m=None) -> SuiteReport:
    """Report e_trc(R) - [e_ex(2R) + R] with the rate inside Gamma set to 2R and to R. Never fails."""
    rep = SuiteReport("relation26")
    w = w or Channel.bsc(0.1)
    m = m or DecodingMetric.likelihood(w, 1.0)
    q = ProbDist.uniform(2)
    rep.lines.append("R,e_trc,gap_gamma_at_2R,gap_gamma_at_R")
    for R in rates:
        trc = ex.e_trc(R, q, w, m, grid).value
        a = ex.e_ex(2 * R, q, w, m, grid, gamma_rate=2 * R).value
        b = ex.e_ex(2 * R, q, w, m, grid, gamma_rate=R).value
        rep.lines.append(f"{R:g},{trc:.6f},{trc - (a + R):.6f},{trc - (b + R):.6f}")
    return rep


def bhattacharyya(w: Channel) -> np.ndarray:
    return -np.log(np.sqrt(w.w[:, None, :] * w.w[None, :, :]).sum(axis=-1))


def ckm_binary(R: float, w: Channel) -> float:
    """CKM expurgated exponent for a binary-input channel with uniform composition.

    The pinned pair polytope is {[[1/2-t, t], [t, 1/2-t]]: 0 <= t <= 1/2};
    minimize E d_B + I(X;X') - R over it subject to I <= R.
    """
    dB = bhattacharyya(w)

    def parts(t):
        Q = np.array([[0.5 - t, t], [t, 0.5 - t]])
        return float((Q * dB).sum()), float(batch_mi(Q, [0], [1], 2))

    def f(t):
        e, i = parts(t)
        return e + i - R if i <= R + 1e-12 else math.inf

    ts = np.linspace(0.0, 0.5, 2001)
    vals = np.array([f(t) for t in ts])
    j = int(np.argmin(vals))
    lo, hi = ts[max(j - 1, 0)], ts[min(j + 1, len(ts) - 1)]
    _, fx = golden_section_1d(f, 1e-12, lo, hi)
    return float(min(vals[j], fx))


def ckm_comparison(grid=GridSpec(), rates=(0.02, 0.05, 0.1)) -> SuiteReport:
    rep = SuiteReport("ckm-comparison")
    w, q = Channel.bsc(0.2), ProbDist.uniform(2)
    m = DecodingMetric.ml_limit(w)
    rep.lines.append("R,e_ex_ml,ckm")
    for R in rates:
        a = ex.e_ex(R, q, w, m, grid).value
        b = ckm_binary(R, w)
        rep.lines.append(f"{R:g},{a:.6f},{b:.6f}")
        rep.check(a >= b - TAU, R, a, b)
    return rep


def exact_quenched_small(n: int, composition, w: Channel, m: DecodingMetric, M: int = 2) -> float:
    """-E[ln P_e]/n averaged over every codebook in the ensemble (M-fold product of the type class)."""
    counts = composition_counts(n, composition)
    base = np.repeat(np.arange(len(counts)), counts)
    cls = sorted(set(itertools.permutations(base.tolist())))
    total = 0.0
    for combo in itertools.product(cls, repeat=M):
        cb = Codebook(n, np.array(combo), ProbDist.of(composition))
        total += math.log(error_prob_exact(cb, w, m))
    return -total / len(cls) ** M / n


def sim_vs_exact(K: int = 500, seed: int = 0) -> SuiteReport:
    """Quenched estimate of a small ensemble against its full enumeration."""
    rep = SuiteReport("sim")
    w, n = Channel.bsc(0.25), 4
    m = DecodingMetric.likelihood(w, 1.0)
    exact = exact_quenched_small(n, [0.5, 0.5], w, m, 2)
    r = ensemble_run(n, [0.5, 0.5], w, m, K, seed, M=2)
    rep.lines.append(f"exact={exact:.6f} quenched={r.quenched:.6f} stderr={r.stderr:.6f}")
    rep.check(abs(r.quenched - exact) <= 3 * r.stderr, "oracle", exact, r.quenched, r.stderr)
    rep.check(r.quenched >= r.annealed - 1e-12, "jensen", r.quenched, r.annealed)
    return rep


SUITES: dict[str, Callable[..., SuiteReport]] = {
    "ordering": ordering,
    "alpha-mmi": alpha_mmi,
    "smmi-equivalence": smmi_equivalence,
    "relation26": relation26,
    "ckm": ckm_comparison,
    "sim": sim_vs_exact,
}

GRID_SUITES = {"ordering", "alpha-mmi", "smmi-equivalence", "relation26", "ckm"}
