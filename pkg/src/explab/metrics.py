"""Decoding metrics g(Q_XY) and generalized likelihood decoder posteriors."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .info import Channel, ContractError, JointDist, ProbDist, batch_expected_log, batch_mi, joint_type

KINDS = ("likelihood", "mismatched", "mmi", "linear", "ml_limit")

# Scores within this distance of the maximum count as ML ties.
TIE_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class DecodingMetric:
    kind: str
    beta: float = 1.0
    channel: Optional[Channel] = None
    coeffs: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ContractError(f"unknown metric kind {self.kind!r}")
        if not (self.beta >= 0 and np.isfinite(self.beta)):
            raise ContractError("beta must be a finite nonnegative number")
        if self.kind in ("likelihood", "mismatched", "ml_limit") and self.channel is None:
            raise ContractError(f"{self.kind} metric needs a channel")
        if self.kind == "linear":
            if self.coeffs is None:
                raise ContractError("linear metric needs a coefficient table")
            c = np.array(self.coeffs, dtype=float)
            if c.ndim != 2 or np.any(np.isnan(c)) or np.any(c == np.inf):
                raise ContractError("linear coefficients must be a finite (or -inf) 2-D table")
            c.setflags(write=False)
            object.__setattr__(self, "coeffs", c)

    @classmethod
    def likelihood(cls, w: Channel, beta: float = 1.0):
        return cls("likelihood", beta, channel=w)

    @classmethod
    def mismatched(cls, wprime: Channel, beta: float = 1.0):
        return cls("mismatched", beta, channel=wprime)

    @classmethod
    def mmi(cls, beta: float = 1.0):
        return cls("mmi", beta)

    @classmethod
    def linear(cls, coeffs):
        return cls("linear", 1.0, coeffs=np.asarray(coeffs, dtype=float))

    @classmethod
    def ml_limit(cls, w: Channel):
        return cls("ml_limit", 1.0, channel=w)

    @property
    def is_linear(self) -> bool:
        return self.kind != "mmi"

    def table(self) -> np.ndarray:
        """Coefficient table c(x, y) with g(Q) = sum Q c; for ml_limit this is ln W."""
        if self.kind == "linear":
            return self.coeffs
        if self.kind == "mmi":
            raise ContractError("the MMI metric is not linear in Q")
        log_w = self.channel.log_w
        if self.kind == "ml_limit":
            return log_w
        if self.beta == 0:
            return np.zeros_like(log_w)
        return self.beta * log_w

    def batch(self, mass_xy: np.ndarray) -> np.ndarray:
        """g over a batch of X-by-Y joints (trailing two axes)."""
        if self.kind == "mmi":
            return self.beta * batch_mi(mass_xy, [0], [1], 2)
        return batch_expected_log(mass_xy, self.table())

    def describe(self) -> dict:
        d = {"kind": self.kind}
        if self.kind in ("likelihood", "mismatched", "mmi"):
            d["beta"] = self.beta
        if self.kind == "mismatched":
            d["Wprime"] = self.channel.w.tolist()
        if self.kind == "linear":
            d["coeffs"] = self.coeffs.tolist()
        return d

    def __eq__(self, other):
        if not isinstance(other, DecodingMetric):
            return NotImplemented
        same_c = (self.coeffs is None and other.coeffs is None) or (
            self.coeffs is not None and other.coeffs is not None
            and np.array_equal(self.coeffs, other.coeffs))
        return (self.kind == other.kind and self.beta == other.beta
                and self.channel == other.channel and same_c)

    def __hash__(self):
        return hash((self.kind, self.beta, self.channel,
                     None if self.coeffs is None else self.coeffs.tobytes()))


def eval_metric(m: DecodingMetric, j: JointDist) -> float:
    if m.kind == "ml_limit":
        raise ContractError("the ML limit has no finite score; use argmax decoding or e_trc_ml")
    if j.ndim != 2:
        raise ContractError("metrics act on X-by-Y joints")
    if m.kind != "mmi" and j.mass.shape != m.table().shape:
        raise ContractError("joint shape does not match the metric's alphabets")
    return float(m.batch(j.mass))


def sequence_score(m: DecodingMetric, xs, ys) -> float:
    x_size = y_size = None
    if m.kind != "mmi":
        x_size, y_size = m.table().shape
    return eval_metric(m, joint_type(xs, ys, x_size, y_size))


def reference_scores(m: DecodingMetric, counts: np.ndarray, n: int) -> np.ndarray:
    """Per-symbol scores from integer joint-type counts (..., |X|, |Y|).

    For ml_limit the score is the per-symbol log-likelihood, i.e. the
    likelihood metric at beta = 1, which orders codewords the same way as
    every large beta.
    """
    return m.batch(counts / n)


def posterior_from_scores(scores: np.ndarray, n: int, m: DecodingMetric, axis: int = -1) -> np.ndarray:
    """GLD posterior over the message axis given per-symbol scores."""
    scores = np.moveaxis(np.asarray(scores, dtype=float), axis, -1)
    top = scores.max(axis=-1, keepdims=True)
    all_dead = np.isneginf(top)
    if m.kind == "ml_limit":
        hits = (scores >= top - TIE_TOL) | all_dead
        post = hits / hits.sum(axis=-1, keepdims=True)
    else:
        with np.errstate(invalid="ignore"):
            z = np.where(all_dead, 0.0, n * (scores - np.where(all_dead, 0.0, top)))
        e = np.exp(z)
        post = e / e.sum(axis=-1, keepdims=True)
    return np.moveaxis(post, -1, axis)


def _codewords(codebook) -> np.ndarray:
    cw = getattr(codebook, "codewords", codebook)
    cw = np.atleast_2d(np.asarray(cw, dtype=int))
    if cw.shape[0] == 0:
        raise ContractError("empty codebook")
    return cw


def gld_posterior(m: DecodingMetric, codebook, ys) -> ProbDist:
    cw = _codewords(codebook)
    ys = np.asarray(ys, dtype=int)
    if cw.shape[1] != ys.size:
        raise ContractError("codeword length differs from the output length")
    n = ys.size
    if m.kind == "mmi":
        x_size = int(cw.max()) + 1
        y_size = int(ys.max()) + 1
    else:
        x_size, y_size = m.table().shape
    counts = np.zeros((cw.shape[0], x_size, y_size))
    for i in range(cw.shape[0]):
        np.add.at(counts[i], (cw[i], ys), 1)
    post = posterior_from_scores(reference_scores(m, counts, n), n, m)
    return ProbDist.of(post)
