"""Alphabets, distributions, empirical types and information measures.

All logarithms are natural. Conventions: 0 ln 0 = 0, 0 ln(0/0) = 0 and
q ln(q/0) = +inf for q > 0.

Besides the object-level API (``entropy(ProbDist)`` and friends) the module
exposes batch helpers (``batch_*``) that act on arrays whose trailing ``d``
axes hold a joint distribution. The optimizers evaluate millions of
candidate joints through these.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

SIMPLEX_TOL = 1e-9


class ContractError(ValueError):
    """Raised when an input violates a documented precondition."""


@dataclass(frozen=True)
class Alphabet:
    size: int
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        if self.size < 1:
            raise ContractError("alphabet size must be >= 1")
        if not self.labels:
            object.__setattr__(self, "labels", tuple(str(i) for i in range(self.size)))
        elif len(self.labels) != self.size:
            raise ContractError("labels length must equal alphabet size")
        else:
            object.__setattr__(self, "labels", tuple(str(s) for s in self.labels))

    @classmethod
    def of(cls, labels) -> "Alphabet":
        if isinstance(labels, Alphabet):
            return labels
        if isinstance(labels, int):
            return cls(labels)
        return cls(len(labels), tuple(labels))


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ProbDist:
    alphabet: Alphabet
    mass: np.ndarray

    def __post_init__(self):
        mass = _frozen(self.mass)
        if mass.ndim != 1 or mass.shape[0] != self.alphabet.size:
            raise ContractError(f"mass shape {mass.shape} does not match alphabet size {self.alphabet.size}")
        if not np.all(np.isfinite(mass)) or np.any(mass < 0):
            raise ContractError("probabilities must be finite and nonnegative")
        if abs(mass.sum() - 1.0) > SIMPLEX_TOL:
            raise ContractError(f"probabilities sum to {float(mass.sum())!r}, not 1")
        object.__setattr__(self, "mass", mass)

    @classmethod
    def of(cls, mass, alphabet=None) -> "ProbDist":
        mass = np.asarray(mass, dtype=float)
        return cls(Alphabet.of(alphabet if alphabet is not None else mass.shape[0]), mass)

    @classmethod
    def uniform(cls, size: int) -> "ProbDist":
        return cls.of(np.full(size, 1.0 / size))

    def __len__(self):
        return self.alphabet.size

    def __eq__(self, other):
        return (isinstance(other, ProbDist) and self.alphabet == other.alphabet
                and np.array_equal(self.mass, other.mass))

    def __hash__(self):
        return hash((self.alphabet, self.mass.tobytes()))

    def __repr__(self):
        return f"ProbDist({np.array2string(self.mass, precision=6)})"


@dataclass(frozen=True, eq=False)
class JointDist:
    axes: tuple[Alphabet, ...]
    mass: np.ndarray

    def __post_init__(self):
        axes = tuple(Alphabet.of(a) for a in self.axes)
        mass = _frozen(self.mass)
        if len(axes) not in (2, 3, 4):
            raise ContractError("joint distributions have 2 to 4 axes")
        if mass.shape != tuple(a.size for a in axes):
            raise ContractError(f"mass shape {mass.shape} does not match axes")
        if not np.all(np.isfinite(mass)) or np.any(mass < 0):
            raise ContractError("probabilities must be finite and nonnegative")
        if abs(mass.sum() - 1.0) > SIMPLEX_TOL:
            raise ContractError(f"joint sums to {float(mass.sum())!r}, not 1")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "mass", mass)

    @classmethod
    def of(cls, mass) -> "JointDist":
        mass = np.asarray(mass, dtype=float)
        return cls(tuple(Alphabet(s) for s in mass.shape), mass)

    @property
    def ndim(self) -> int:
        return len(self.axes)

    def marginal(self, keep: Sequence[int]) -> np.ndarray:
        """Marginal table over the axes in ``keep`` (in increasing axis order)."""
        drop = tuple(a for a in range(self.ndim) if a not in keep)
        return self.mass.sum(axis=drop)

    def __eq__(self, other):
        return (isinstance(other, JointDist) and self.axes == other.axes
                and np.array_equal(self.mass, other.mass))

    def __hash__(self):
        return hash((self.axes, self.mass.tobytes()))

    def __repr__(self):
        return f"JointDist(shape={self.mass.shape}, mass={self.mass.ravel().round(6).tolist()})"


@dataclass(frozen=True, eq=False)
class Channel:
    input: Alphabet
    output: Alphabet
    w: np.ndarray
    log_w: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        w = _frozen(self.w)
        if w.shape != (self.input.size, self.output.size):
            raise ContractError(f"W has shape {w.shape}, expected {(self.input.size, self.output.size)}")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ContractError("channel entries must be finite and nonnegative")
        bad = np.abs(w.sum(axis=1) - 1.0) > SIMPLEX_TOL
        if bad.any():
            raise ContractError(f"channel rows {np.flatnonzero(bad).tolist()} do not sum to 1")
        with np.errstate(divide="ignore"):
            log_w = np.log(w)
        log_w.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "log_w", log_w)

    @classmethod
    def of(cls, w, x_labels=None, y_labels=None) -> "Channel":
        w = np.asarray(w, dtype=float)
        return cls(Alphabet.of(x_labels if x_labels is not None else w.shape[0]),
                   Alphabet.of(y_labels if y_labels is not None else w.shape[1]), w)

    @classmethod
    def bsc(cls, p: float) -> "Channel":
        return cls.of([[1 - p, p], [p, 1 - p]])

    @classmethod
    def identity(cls, size: int = 2) -> "Channel":
        return cls.of(np.eye(size))

    @classmethod
    def useless(cls, q_y, inputs: int = 2) -> "Channel":
        return cls.of(np.tile(np.asarray(q_y, dtype=float), (inputs, 1)))

    def __eq__(self, other):
        return (isinstance(other, Channel) and self.input == other.input
                and self.output == other.output and np.array_equal(self.w, other.w))

    def __hash__(self):
        return hash((self.input, self.output, self.w.tobytes()))

    def __repr__(self):
        return f"Channel(W={self.w.tolist()})"


# --- batch helpers -------------------------------------------------------

def xlogx(p):
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)


def batch_marginal(mass: np.ndarray, keep: Sequence[int], d: int) -> np.ndarray:
    """Sum the trailing ``d`` event axes of ``mass`` down to those in ``keep``."""
    lead = mass.ndim - d
    drop = tuple(lead + a for a in range(d) if a not in keep)
    return mass.sum(axis=drop) if drop else mass


def batch_entropy(mass: np.ndarray, keep: Sequence[int], d: int) -> np.ndarray:
    if not keep:
        return np.zeros(mass.shape[: mass.ndim - d])
    m = batch_marginal(mass, keep, d)
    k = len(keep)
    return -xlogx(m).sum(axis=tuple(range(m.ndim - k, m.ndim)))


def batch_mi(mass: np.ndarray, a: Sequence[int], b: Sequence[int], d: int,
             given: Sequence[int] = ()) -> np.ndarray:
    """I(A;B|C) for disjoint axis groups A, B, C of the trailing ``d`` axes."""
    if d == 2 and not given and set(a) | set(b) == {0, 1}:
        pa = mass.sum(axis=-1, keepdims=True)
        pb = mass.sum(axis=-2, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(mass > 0, mass * (np.log(mass) - np.log(pa) - np.log(pb)), 0.0)
        return np.maximum(terms.sum(axis=(-2, -1)), 0.0)
    a, b, c = set(a), set(b), set(given)
    h = lambda s: batch_entropy(mass, sorted(s), d)
    val = h(a | c) + h(b | c) - h(a | b | c) - h(c)
    return np.maximum(val, 0.0)


def batch_expected_log(mass2: np.ndarray, log_table: np.ndarray) -> np.ndarray:
    """E_Q log_table over a batch of 2-axis joints, with 0 * (-inf) = 0."""
    lt = np.broadcast_to(log_table, mass2.shape)
    terms = np.where(mass2 > 0, mass2 * np.where(np.isfinite(lt), lt, 0.0), 0.0)
    out = terms.sum(axis=(-2, -1))
    hit = ((mass2 > 0) & np.isneginf(lt)).any(axis=(-2, -1))
    return np.where(hit, -np.inf, out)


def batch_divergence(mass_xy: np.ndarray, w: np.ndarray) -> np.ndarray:
    """D(Q_{Y|X} || W | Q_X) for a batch of X-by-Y joints."""
    qx = mass_xy.sum(axis=-1, keepdims=True)
    w = np.broadcast_to(w, mass_xy.shape)
    # log-domain ratio: qx * w can underflow where mass_xy does not
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(mass_xy > 0, mass_xy * (np.log(mass_xy) - np.log(qx) - np.log(w)), 0.0)
    out = terms.sum(axis=(-2, -1))
    hit = ((mass_xy > 0) & (w <= 0)).any(axis=(-2, -1))
    return np.where(hit, np.inf, np.maximum(out, 0.0))


def batch_kernel_divergence(mass: np.ndarray, w: np.ndarray, d: int) -> np.ndarray:
    """D(Q_{Y|S} || W(.|x) | Q_S) for joints whose trailing ``d`` axes are (X, ..., Y).

    W is read on the first event axis.  This equals D(Q_{Y|X}||W|Q_X) plus
    I(rest;Y|X): the cost of the output landing in a conditional type given
    every sequence in S.
    """
    qs = mass.sum(axis=-1, keepdims=True)
    wb = np.broadcast_to(w.reshape((w.shape[0],) + (1,) * (d - 2) + (w.shape[1],)), mass.shape)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(mass > 0, mass * (np.log(mass) - np.log(qs) - np.log(wb)), 0.0)
    axes = tuple(range(mass.ndim - d, mass.ndim))
    out = terms.sum(axis=axes)
    hit = ((mass > 0) & (wb <= 0)).any(axis=axes)
    return np.where(hit, np.inf, np.maximum(out, 0.0))


# --- object-level API ----------------------------------------------------

def entropy(p: ProbDist) -> float:
    return float(-xlogx(p.mass).sum())


def _require_axes(j: JointDist, n: int):
    if j.ndim != n:
        raise ContractError(f"expected a {n}-axis joint, got {j.ndim} axes")


def mutual_information(j: JointDist) -> float:
    _require_axes(j, 2)
    return float(batch_mi(j.mass, [0], [1], 2))


def conditional_mi(j: JointDist, a: int = 1, b: int = 2, given: int = 0) -> float:
    """I(A;B|C) on a 3-axis joint; the default reads I(X';Y|X) on (X, X', Y)."""
    _require_axes(j, 3)
    if len({a, b, given}) != 3:
        raise ContractError("conditional_mi needs three distinct axes")
    return float(batch_mi(j.mass, [a], [b], 3, [given]))


def multi_information(j: JointDist) -> float:
    _require_axes(j, 3)
    h = sum(float(batch_entropy(j.mass, [a], 3)) for a in range(3))
    return max(h - float(batch_entropy(j.mass, [0, 1, 2], 3)), 0.0)


def weighted_divergence(q: JointDist, w: Channel, q_x: ProbDist | None = None) -> float:
    """D(Q_{Y|X} || W | Q_X) where Q_{Y|X} is read off the 2-axis joint ``q``."""
    _require_axes(q, 2)
    if q.mass.shape != w.w.shape:
        raise ContractError("joint shape does not match the channel")
    if q_x is not None and np.max(np.abs(q.mass.sum(axis=1) - q_x.mass)) > SIMPLEX_TOL:
        raise ContractError("X-marginal of the joint does not match q_x")
    return float(batch_divergence(q.mass, w.w))


def joint_type(xs: Sequence[int], ys: Sequence[int], x_size: int | None = None,
               y_size: int | None = None) -> JointDist:
    xs = np.asarray(xs, dtype=int)
    ys = np.asarray(ys, dtype=int)
    if xs.shape != ys.shape or xs.ndim != 1 or xs.size == 0:
        raise ContractError("sequences must be nonempty and of equal length")
    x_size = x_size or int(xs.max()) + 1
    y_size = y_size or int(ys.max()) + 1
    counts = np.zeros((x_size, y_size))
    np.add.at(counts, (xs, ys), 1)
    return JointDist.of(counts / xs.size)


def type_of(xs: Sequence[int], size: int | None = None) -> ProbDist:
    xs = np.asarray(xs, dtype=int)
    size = size or int(xs.max()) + 1
    return ProbDist.of(np.bincount(xs, minlength=size) / xs.size)


def marginals(j: JointDist) -> list[ProbDist]:
    return [ProbDist(j.axes[a], j.marginal([a])) for a in range(j.ndim)]


def product(*ps: ProbDist) -> JointDist:
    mass = ps[0].mass
    for p in ps[1:]:
        mass = np.multiply.outer(mass, p.mass)
    return JointDist(tuple(p.alphabet for p in ps), mass)
