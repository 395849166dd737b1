"""Homogeneous frequency partitions of unity and their constants.

Three cutoff families are built here, all degree-zero homogeneous by
construction (they only ever see ratios of norms):

* ``chi``: splits a frequency space (sigma, tau) by the ratio
  |tau| / |(sigma, tau)| into a cone where sigma dominates, a transition
  cone, and a cone where tau dominates.
* ``psi``: splits by the ratio |tau| / |sigma_tilde| of two different
  frequency blocks, used when composing kernels.
* good/bad: splits by |sigma - rho * grad h(z)| / |(sigma, rho)|, isolating
  the region where a frequency shift along the interface conormal stays
  elliptic.

All transitions use one fixed smooth step built from the exp(-1/t)
mollifier, so each cutoff is smooth and takes values in [0, 1].
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

from .errors import ConstantError

__all__ = [
    "smooth_step",
    "bump_window",
    "PartitionConstants",
    "HomogeneousCutoff",
    "build_chi",
    "build_psi",
    "build_good_bad",
]


def smooth_step(t):
    """C-infinity ramp: 0 for t <= 0, 1 for t >= 1, strictly increasing between."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    out[t >= 1.0] = 1.0
    mid = (t > 0.0) & (t < 1.0)
    tm = t[mid]
    g = np.exp(-1.0 / tm)
    g1 = np.exp(-1.0 / (1.0 - tm))
    out[mid] = g / (g + g1)
    return out


def _ramp(r, a, b):
    """Smooth transition from 0 at r <= a to 1 at r >= b."""
    with np.errstate(invalid="ignore"):
        return smooth_step((np.asarray(r, dtype=float) - a) / (b - a))


def bump_window(x, flat: float, support: float):
    """Even window: 1 on |x| <= flat, 0 on |x| >= support, smooth between."""
    if not 0 < flat < support:
        raise ConstantError("window needs 0 < flat < support")
    return 1.0 - _ramp(np.abs(x), flat, support)


_DELTA_LOW = 1.0 / math.sqrt(5.0)
_DELTA_HIGH = 2.0 / math.sqrt(5.0)


def _c_of_delta(d: float) -> float:
    return d / math.sqrt(1.0 - d * d)


@dataclass(frozen=True)
class PartitionConstants:
    """Cutoff constants: deltas on the sphere, slope bounds c, and epsilons.

    ``c_i = delta_i / sqrt(1 - delta_i**2)`` converts each sphere threshold
    into a bound between |tau| and |sigma|.  The epsilons for the second
    partition are derived so that the phase-gradient lower bounds come out
    to exactly one half of the dominant block; the two free ones are pinned
    as eps1 = eps2 / 2 and eps4 = 2 * eps3 for reproducibility.
    """

    delta: Tuple[float, float, float, float]
    c: Tuple[float, float, float, float]
    eps: Tuple[float, float, float, float]

    DEFAULT_DELTA = (0.30, 0.40, 0.92, 0.96)

    @classmethod
    def from_delta(cls, delta=None) -> "PartitionConstants":
        if delta is None:
            delta = cls.DEFAULT_DELTA
        d1, d2, d3, d4 = (float(d) for d in delta)
        if not (0.0 < d1 < d2 < _DELTA_LOW and _DELTA_HIGH < d3 < d4 < 1.0):
            raise ConstantError(
                f"delta ordering violated: need 0 < {d1} < {d2} < {_DELTA_LOW:.6f} "
                f"and {_DELTA_HIGH:.6f} < {d3} < {d4} < 1"
            )
        c = tuple(_c_of_delta(d) for d in (d1, d2, d3, d4))
        c1, c2, c3, c4 = c
        if not (0.0 < c1 < c2 < 0.5 < 2.0 < c3 < c4):
            raise ConstantError(f"c ordering violated: {c}")
        eps2 = ((1.0 - c2) - 0.5) / (1.0 + 1.0 / c3)
        eps3 = (1.0 + c2) / ((1.0 - 1.0 / c3) - 0.5)
        if not 0.0 < eps2 < 1.0:
            raise ConstantError(f"eps2={eps2} outside (0, 1)")
        if not eps3 > 1.0:
            raise ConstantError(f"eps3={eps3} not above 1")
        eps = (eps2 / 2.0, eps2, eps3, 2.0 * eps3)
        return cls(delta=(d1, d2, d3, d4), c=c, eps=eps)

    def to_json(self, path=None) -> str:
        payload = json.dumps({"delta": self.delta, "c": self.c, "eps": self.eps}, indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(payload + "\n")
        return payload


@dataclass(frozen=True)
class HomogeneousCutoff:
    """A degree-zero homogeneous cutoff with values in [0, 1].

    ``eval`` sees only ratios of norms, so scaling every frequency argument
    by a positive constant leaves the value unchanged (bit-for-bit for
    power-of-two scalings).  ``support`` is the open cover inequality the
    cutoff is subordinate to.
    """

    name: str
    eval: Callable
    support: Callable
    smoothness_order: int = 3

    def __call__(self, *args):
        return self.eval(*args)


def _split_last(freq, n: int):
    freq = np.asarray(freq, dtype=float)
    sigma = freq[..., :n]
    tau = freq[..., n]
    return sigma, tau


def _chi_ratio(freq, n: int):
    """|tau| / |(sigma, tau)| with the zero point mapped to ratio 0."""
    freq = np.asarray(freq, dtype=float)
    tau = freq[..., n]
    total = np.sqrt(np.sum(freq * freq, axis=-1))
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(total > 0.0, np.abs(tau) / total, 0.0)
    return r


def build_chi(consts: PartitionConstants, n: int = 1):
    """Partition of unity (chi1, chi2, chi3) on (sigma, tau) frequency space.

    Layout convention: the last coordinate of a frequency point is the
    scalar tau, the leading ``n`` are sigma.  Supports:
    chi1 in {|tau| < c2 |sigma|}, chi2 in {c1 |sigma| < |tau| < c4 |sigma|},
    chi3 in {c3 |sigma| < |tau|}; the three sum to one identically.
    """
    d1, d2, d3, d4 = consts.delta

    def chi1(freq):
        return 1.0 - _ramp(_chi_ratio(freq, n), d1, d2)

    def chi2(freq):
        r = _chi_ratio(freq, n)
        return _ramp(r, d1, d2) - _ramp(r, d3, d4)

    def chi3(freq):
        return _ramp(_chi_ratio(freq, n), d3, d4)

    return (
        HomogeneousCutoff("chi1", chi1, lambda f: _chi_ratio(f, n) < d2),
        HomogeneousCutoff("chi2", chi2, lambda f: (_chi_ratio(f, n) > d1) & (_chi_ratio(f, n) < d4)),
        HomogeneousCutoff("chi3", chi3, lambda f: _chi_ratio(f, n) > d3),
    )


def _psi_ratio(freq, n: int):
    """|tau| / |sigma_tilde| in [0, inf]; layout (sigma_tilde..., tau)."""
    sigma, tau = _split_last(freq, n)
    norm_s = np.sqrt(np.sum(sigma * sigma, axis=-1))
    with np.errstate(divide="ignore"):
        return np.where(norm_s > 0.0, np.abs(tau) / norm_s, np.inf)


def build_psi(consts: PartitionConstants, n: int = 1):
    """Partition (psi1, psi2, psi3) in the ratio of two frequency blocks.

    Supports: psi1 in {|tau| < eps2 |sigma_tilde|}, psi2 in
    {eps1 |sigma_tilde| < |tau| < eps4 |sigma_tilde|}, psi3 in
    {eps3 |sigma_tilde| < |tau|}.
    """
    e1, e2, e3, e4 = consts.eps
    if not (0.0 < e1 < e2 < 1.0 < e3 < e4):
        raise ConstantError(f"eps ordering violated: {consts.eps}")

    def psi1(freq):
        return 1.0 - _ramp(_psi_ratio(freq, n), e1, e2)

    def psi2(freq):
        r = _psi_ratio(freq, n)
        return _ramp(r, e1, e2) - _ramp(r, e3, e4)

    def psi3(freq):
        return _ramp(_psi_ratio(freq, n), e3, e4)

    return (
        HomogeneousCutoff("psi1", psi1, lambda f: _psi_ratio(f, n) < e2),
        HomogeneousCutoff("psi2", psi2, lambda f: (_psi_ratio(f, n) > e1) & (_psi_ratio(f, n) < e4)),
        HomogeneousCutoff("psi3", psi3, lambda f: _psi_ratio(f, n) > e3),
    )


def build_good_bad(h):
    """Cutoff pair isolating where sigma - rho * grad h(z) stays elliptic.

    ``h`` is an interface object with ``gradient(z)``.  The base transition
    vanishes for ratio <= 1/2 and equals one for ratio >= 1, so chi_good is
    supported where |sigma - rho grad h(z)| > |(sigma, rho)| / 2 and
    chi_bad = 1 - chi_good where the shifted covector degenerates.
    """

    def ratio(z, sigma, rho):
        z = np.atleast_2d(np.asarray(z, dtype=float))
        sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
        rho = np.asarray(rho, dtype=float)
        shifted = sigma - rho[..., None] * h.gradient(z)
        num = np.sqrt(np.sum(shifted * shifted, axis=-1))
        den = np.sqrt(np.sum(sigma * sigma, axis=-1) + rho * rho)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(den > 0.0, num / den, 0.0)

    def chi_good(z, sigma, rho):
        return _ramp(ratio(z, sigma, rho), 0.5, 1.0)

    def chi_bad(z, sigma, rho):
        return 1.0 - _ramp(ratio(z, sigma, rho), 0.5, 1.0)

    good = HomogeneousCutoff("chi_good", chi_good, lambda z, s, r: ratio(z, s, r) > 0.5)
    bad = HomogeneousCutoff("chi_bad", chi_bad, lambda z, s, r: ratio(z, s, r) < 1.0)
    return good, bad
