"""Exact small-blocklength error probabilities of sampled fixed-composition codes.

The channel output is summed over all of Y^n, and the decoder's randomness is
averaged analytically, so the only Monte Carlo layer left is the draw of the
codebook itself.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .info import Channel, ContractError, ProbDist, batch_expected_log, batch_mi
from .metrics import TIE_TOL, DecodingMetric, posterior_from_scores

# Full output enumeration is allowed while n ln|Y| <= CAP_BITS ln 2.
CAP_BITS = 18
MODES = ("plain", "list2", "erasure")


class CapExceeded(ContractError):
    """The output space Y^n is too large to enumerate."""


class AllZeroError(ContractError):
    """Every sampled code had zero error probability; the quenched mean is undefined."""


@dataclass(frozen=True, eq=False)
class Codebook:
    n: int
    codewords: np.ndarray  # (M, n) integer symbols
    composition: ProbDist
    seed_record: tuple = ()

    @property
    def M(self) -> int:
        return self.codewords.shape[0]


def composition_counts(n: int, composition) -> np.ndarray:
    q = np.asarray(getattr(composition, "mass", composition), dtype=float)
    raw = n * q
    counts = np.rint(raw).astype(np.int64)
    if np.max(np.abs(raw - counts)) > 1e-9 or counts.sum() != n:
        raise ContractError(f"composition {q.tolist()} is not a type of length {n}: "
                            f"entries must be multiples of 1/{n}")
    return counts


def _stream(seed: int, code_index: int, draw: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(code_index), int(draw)]))


def sample_codebook(n: int, composition, M: int, seed: int, code_index: int = 0) -> Codebook:
    """M independent uniform draws from the type class, one keyed stream per codeword."""
    if M < 1:
        raise ContractError("a codebook needs M >= 1")
    counts = composition_counts(n, composition)
    base = np.repeat(np.arange(len(counts)), counts)
    cw = np.stack([_stream(seed, code_index, j).permutation(base) for j in range(M)])
    cw.setflags(write=False)
    comp = composition if isinstance(composition, ProbDist) else ProbDist.of(composition)
    return Codebook(n, cw, comp, (int(seed), int(code_index), M))


# --- output enumeration ------------------------------------------------------

def _check_cap(n: int, y_size: int):
    if n * math.log(y_size) > CAP_BITS * math.log(2) + 1e-12:
        raise CapExceeded(f"|Y|^n = {y_size}^{n} exceeds the enumeration cap 2^{CAP_BITS}")


def _all_outputs(n: int, y_size: int) -> np.ndarray:
    _check_cap(n, y_size)
    idx = np.arange(y_size ** n)
    digits = (idx[:, None] // y_size ** np.arange(n - 1, -1, -1)[None]) % y_size
    return digits


def _joint_counts(cb: Codebook, ys: np.ndarray, x_size: int, y_size: int) -> np.ndarray:
    """counts[y, m, a, b] = #{i: x_m[i] = a, y[i] = b}."""
    X1 = np.eye(x_size)[cb.codewords]
    Y1 = np.eye(y_size)[ys]
    return np.einsum("mia,yib->ymab", X1, Y1)


def _channel_and_scores(cb: Codebook, w: Channel, m: DecodingMetric):
    if cb.codewords.max() >= w.input.size:
        raise ContractError("codewords use symbols outside the channel input alphabet")
    ys = _all_outputs(cb.n, w.output.size)
    counts = _joint_counts(cb, ys, w.input.size, w.output.size)
    with np.errstate(over="ignore"):
        lik = np.exp(batch_expected_log(counts, w.log_w))  # W(y|x_m), shape (|Y|^n, M)
    ref = m if m.kind != "ml_limit" else DecodingMetric.ml_limit(w)
    scores = ref.batch(counts / cb.n)
    return lik, scores


def _wrong_mass(post: np.ndarray) -> np.ndarray:
    """sum over m' != m of post[..., m'], without the cancellation of 1 - post."""
    M = post.shape[-1]
    return post @ (np.ones((M, M)) - np.eye(M))


def error_prob_exact(cb: Codebook, w: Channel, m: DecodingMetric) -> float:
    """Average error probability of the GLD, exact over channel and decoder randomness."""
    lik, scores = _channel_and_scores(cb, w, m)
    post = posterior_from_scores(scores, cb.n, m)
    pe = (lik * _wrong_mass(post)).sum() / cb.M
    return float(min(max(pe, 0.0), 1.0))


def argmax_error_prob_exact(cb: Codebook, w: Channel, m: DecodingMetric) -> float:
    """Error probability of the deterministic score-argmax rule, ties split uniformly."""
    lik, scores = _channel_and_scores(cb, w, m)
    post = posterior_from_scores(scores, cb.n, DecodingMetric.ml_limit(w))
    return float(min(max((lik * _wrong_mass(post)).sum() / cb.M, 0.0), 1.0))


def list_error_prob_exact(cb: Codebook, w: Channel, m: DecodingMetric, L: int = 2) -> float:
    """Probability that the sent message misses the top-L score list.

    Ties at the list boundary are split uniformly over the tied messages.
    """
    if L < 1:
        raise ContractError("list size must be >= 1")
    if cb.M <= L:
        return 0.0
    lik, s = _channel_and_scores(cb, w, m)
    with np.errstate(invalid="ignore"):
        diff = s[:, None, :] - s[:, :, None]  # [y, m, m'] = s_m' - s_m
    both_dead = np.isneginf(s)[:, None, :] & np.isneginf(s)[:, :, None]
    above = np.where(both_dead, False, diff > TIE_TOL).sum(axis=-1)
    tied = (both_dead | (np.abs(np.nan_to_num(diff, nan=0.0)) <= TIE_TOL)).sum(axis=-1)
    slots = L - above
    excl = np.where(slots <= 0, 1.0, np.where(tied <= slots, 0.0, 1.0 - slots / np.maximum(tied, 1)))
    return float(min(max((lik * excl).sum() / cb.M, 0.0), 1.0))


def ue_prob_exact(cb: Codebook, w: Channel, m: DecodingMetric, T: float) -> float:
    """Undetected-error probability of the erasure/list rule with threshold T.

    Message m' is decided when exp{n g_m'} >= e^{nT} sum over the others of exp{n g};
    an undetected error is some m' != m being decided.
    """
    if m.kind == "ml_limit":
        raise ContractError("the erasure threshold needs a finite-scale metric, not the ML limit")
    if not np.isfinite(T):
        raise ContractError("threshold must be finite")
    lik, s = _channel_and_scores(cb, w, m)
    M, n = cb.M, cb.n
    a = n * s
    others = np.where(np.eye(M, dtype=bool)[None], -np.inf, a[:, None, :])  # [y, m', m~]
    top = others.max(axis=-1)
    safe = np.where(np.isneginf(top), 0.0, top)
    with np.errstate(divide="ignore", invalid="ignore"):
        lse = safe + np.log(np.exp(others - safe[..., None]).sum(axis=-1))
        lse = np.where(np.isneginf(top), -np.inf, lse)
        margin = a - lse
    # exact ties come out of different count tables, so compare with the score tolerance
    decided = np.nan_to_num(margin, nan=-np.inf) >= n * (T - TIE_TOL)
    wrong = decided.astype(float) @ (np.ones((M, M)) - np.eye(M))  # number of m' != m decided
    p = (lik * (wrong > 0)).sum() / M
    return float(min(max(p, 0.0), 1.0))


# --- ensembles -----------------------------------------------------------------

@dataclass
class SimulationReport:
    per_code: list  # ln P_e per code, -inf for P_e = 0
    quenched: float
    annealed: float
    std_normalized: float
    K: int
    mode: str
    zero_pe_count: int
    n: int
    M: int
    stderr: float = math.nan

    def __post_init__(self):
        if self.K != len(self.per_code):
            raise ContractError("K must equal the number of per-code records")


def _mode_prob(mode: str, cb, w, m, T):
    if mode == "plain":
        return error_prob_exact(cb, w, m)
    if mode == "list2":
        return list_error_prob_exact(cb, w, m, 2)
    if mode == "erasure":
        if T is None:
            raise ContractError("erasure mode needs a threshold")
        return ue_prob_exact(cb, w, m, T)
    raise ContractError(f"unknown simulation mode {mode!r}")


def _one_code(args):
    n, comp, M, seed, i, mode, w, m, T = args
    cb = sample_codebook(n, comp, M, seed, i)
    return _mode_prob(mode, cb, w, m, T)


def summarize(ln_pe: np.ndarray, n: int):
    """(quenched, annealed, std_normalized, stderr, zero count) from per-code ln P_e.

    Codes with P_e = 0 are left out of both averages, so the Jensen ordering
    quenched >= annealed holds on the same set.
    """
    ln_pe = np.asarray(ln_pe, dtype=float)
    live = ln_pe[np.isfinite(ln_pe)]
    zeros = int(len(ln_pe) - len(live))
    if len(live) == 0:
        raise AllZeroError("every code has P_e = 0")
    e = -live / n
    quenched = float(e.mean())
    top = live.max()
    annealed = float(-(top + math.log(np.exp(live - top).mean())) / n)
    std = float(e.std(ddof=1)) if len(live) > 1 else 0.0
    return quenched, annealed, std, std / math.sqrt(len(live)), zeros


def ensemble_run(n: int, composition, w: Channel, m: DecodingMetric, K: int, seed: int,
                 M: Optional[int] = None, R: Optional[float] = None, mode: str = "plain",
                 T: Optional[float] = None, workers: Optional[int] = None) -> SimulationReport:
    """Sample K codebooks and evaluate each one exactly.

    Exactly one of M and R is given; R (nats) sets M = round(e^{nR}).
    """
    if (M is None) == (R is None):
        raise ContractError("give exactly one of M or R")
    if M is None:
        M = int(round(math.exp(n * R)))
    if K < 1 or M < 1:
        raise ContractError("K and M must be positive")
    if mode not in MODES:
        raise ContractError(f"unknown simulation mode {mode!r}")
    composition_counts(n, composition)
    _check_cap(n, w.output.size)
    if workers is None:
        workers = int(os.environ.get("EXPLAB_THREADS", "1") or 1)
    jobs = [(n, composition, M, seed, i, mode, w, m, T) for i in range(K)]
    if workers > 1 and K > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as ex:
            probs = list(ex.map(_one_code, jobs))
    else:
        probs = [_one_code(j) for j in jobs]
    with np.errstate(divide="ignore"):
        ln_pe = np.log(np.asarray(probs, dtype=float))
    q, a, std, se, zeros = summarize(ln_pe, n)
    tag = mode if mode != "erasure" else f"erasure({T:g})"
    return SimulationReport([float(v) for v in ln_pe], q, a, std, K, tag, zeros, n, M, se)


# --- pair-type enumerators ---------------------------------------------------------

@dataclass
class EnumeratorTable:
    n: int
    counts: dict = field(default_factory=dict)  # joint count table (tuple of tuples) -> N

    @property
    def total(self) -> int:
        return int(sum(self.counts.values()))

    def joint(self, key) -> np.ndarray:
        return np.asarray(key, dtype=float) / self.n


def pair_count_tables(cb: Codebook, x_size: Optional[int] = None) -> np.ndarray:
    """C[m, m', a, b] = #{i: x_m[i] = a, x_m'[i] = b}."""
    x_size = x_size or len(cb.composition)
    X1 = np.eye(x_size)[cb.codewords]
    return np.einsum("mia,kib->mkab", X1, X1)


def enumerator_stats(cb: Codebook) -> EnumeratorTable:
    """Ordered-pair counts N(Q_XX') over distinct message indices."""
    M = cb.M
    tbl = EnumeratorTable(cb.n)
    if M < 2:
        return tbl
    C = pair_count_tables(cb).astype(np.int64)
    off = ~np.eye(M, dtype=bool)
    flat = C[off].reshape(M * (M - 1), -1)
    keys, cnt = np.unique(flat, axis=0, return_counts=True)
    shape = C.shape[2:]
    for k, c in zip(keys, cnt):
        tbl.counts[tuple(map(tuple, k.reshape(shape).tolist()))] = int(c)
    return tbl


def _log_multinomial(n, parts) -> float:
    return math.lgamma(n + 1) - sum(math.lgamma(p + 1) for p in parts)


def pair_type_probability(key, row_counts) -> float:
    """Pr{an independent uniform draw x' lands in the pair type ``key`` given x}.

    Given x with n_a symbols a, the conditional type fixes n_ab; the number of
    completions is prod_a multinomial(n_a; n_ab) out of multinomial(n; n_b).
    """
    k = np.asarray(key, dtype=np.int64)
    n = int(k.sum())
    if not np.array_equal(k.sum(axis=1), row_counts):
        return 0.0
    lnum = sum(_log_multinomial(int(row_counts[a]), k[a].tolist()) for a in range(k.shape[0]))
    lden = _log_multinomial(n, k.sum(axis=0).tolist())
    return math.exp(lnum - lden)


def pair_types(n: int, row_counts: np.ndarray):
    """Every pair count table with both margins equal to ``row_counts``."""
    from .opt import _pinned_tables
    A = len(row_counts)
    lo = np.zeros((A, A), np.int64)
    hi = np.full((A, A), n, np.int64)
    return _pinned_tables((A, A), [row_counts, row_counts], lo, hi)


@dataclass
class EnumeratorRow:
    key: tuple
    mutual_info: float
    predicted_exponent: float  # 2R - I
    exact_mean: float
    empirical_mean: float
    var_over_mean2: float
    freq_nonzero: float
    regime: str  # "typical", "rare" or "boundary"


def enumerator_concentration(n: int, composition, R: float, K: int, seed: int,
                             M: Optional[int] = None, band: float = 0.1) -> list:
    """Statistics of N(Q_XX') across K sampled codebooks, one row per pair type.

    Types with I < 2R - band are "typical" (mean and var/mean^2 are the
    interesting columns); types with I > 2R + band are "rare" (the frequency
    of N >= 1 is).  Everything is reported for every type.
    """
    counts = composition_counts(n, composition)
    if M is None:
        M = int(round(math.exp(n * R)))
    types = pair_types(n, counts)
    index = {tuple(t.ravel().tolist()): i for i, t in enumerate(types)}
    N = np.zeros((K, len(types)))
    for c in range(K):
        cb = sample_codebook(n, composition, M, seed, c)
        for key, v in enumerator_stats(cb).counts.items():
            N[c, index[tuple(np.ravel(key).tolist())]] = v
    rows = []
    mean = N.mean(axis=0)
    var = N.var(axis=0, ddof=1) if K > 1 else np.zeros(len(types))
    for i, t in enumerate(types):
        I = float(batch_mi(t / n, [0], [1], 2))
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = var[i] / mean[i] ** 2 if mean[i] > 0 else math.inf
        regime = "typical" if I < 2 * R - band else ("rare" if I > 2 * R + band else "boundary")
        rows.append(EnumeratorRow(
            tuple(map(tuple, t.tolist())), I, 2 * R - I,
            M * (M - 1) * pair_type_probability(t, counts),
            float(mean[i]), float(ratio), float((N[:, i] >= 1).mean()), regime))
    return rows


def product_type_key(n: int, composition) -> tuple:
    """The pair type closest to independence (exact when n q(a) q(b) is integral)."""
    counts = composition_counts(n, composition)
    q = counts / n
    from .opt import round_counts
    flat = round_counts(np.outer(q, q).ravel(), n)
    t = flat.reshape(len(q), len(q))
    if not (np.array_equal(t.sum(axis=1), counts) and np.array_equal(t.sum(axis=0), counts)):
        raise ContractError("no pair type with these margins sits on the product")
    return tuple(map(tuple, t.tolist()))
