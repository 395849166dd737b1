"""Composition of two flowout operators whose canonical relation meets the
zero section: adjoint kernel, partial-convolution amplitude, the
elliptic/degenerate frequency split, both critical-point branches, and the
smoothness check for the leftover degenerate cone.

Conventions mirror the kernel representations used throughout: a flowout
kernel is an oscillatory integral with phase (x - y) . sigma + h(x) theta
and a standard symbol of order m - 1/2 for an operator of order m.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from .convest import a3_batch
from .errors import DomainError, InvalidPointError
from .ledger import Dyadic, IplClass, predict_zero_section_orders
from .oscint import KernelGrid
from .partition import PartitionConstants, build_good_bad, smooth_step
from .symbols import Symbol, SymbolClass

__all__ = [
    "ZeroSectionCase",
    "classify_zero_section",
    "flowout_chain_bound",
    "adjoint_amplitude",
    "CompositionResult",
    "compose_zero_section",
    "Bad2Report",
    "check_bad2_smoothness",
    "iterated_regularity_diagnostic",
]


@dataclass(frozen=True)
class ZeroSectionCase:
    """Which end of a flowout point degenerates, with the witness point."""

    side: str  # "left" | "right" | "none"
    x: np.ndarray
    xi: np.ndarray
    t: float


def classify_zero_section(x, xi, t: float, h, rel_tol: float = 1e-12) -> ZeroSectionCase:
    """Degeneracy side of the flowout point (x, xi) -> (x, xi - t grad h(x)).

    The left end degenerates when xi vanishes with t nonzero; the right end
    when xi is exactly the conormal multiple t grad h(x).  Both cannot
    happen at once; the zero covector pair is rejected.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    scale = np.linalg.norm(xi) + abs(t)
    if scale == 0.0:
        raise InvalidPointError("the zero covector is not a point of the relation")
    if np.linalg.norm(xi) <= rel_tol * abs(t):
        return ZeroSectionCase(side="left", x=x, xi=xi, t=t)
    eta = xi - t * h.gradient(x[None, :])[0]
    if t != 0.0 and np.linalg.norm(eta) <= rel_tol * scale:
        return ZeroSectionCase(side="right", x=x, xi=xi, t=t)
    return ZeroSectionCase(side="none", x=x, xi=xi, t=t)


def flowout_chain_bound(x, xi, ts: Sequence[float], h, c2: float) -> Tuple[float, float]:
    """Follow a chain of flowout hops with |t| < c2 |current covector|.

    Returns (final covector norm, (1 - c2)**len(ts) * |xi|): the chain stays
    elliptic because each hop loses at most a factor (1 - c2).
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    cur = np.atleast_1d(np.asarray(xi, dtype=float)).copy()
    grad = h.gradient(x[None, :])[0]
    lower = np.linalg.norm(cur)
    for t in ts:
        if abs(t) >= c2 * np.linalg.norm(cur):
            raise InvalidPointError("hop size violates the cone restriction")
        cur = cur - t * grad
    return float(np.linalg.norm(cur)), float((1.0 - c2) ** len(ts) * lower)


def adjoint_amplitude(a1: Symbol) -> Symbol:
    """Amplitude of the adjoint kernel: arguments swapped, values conjugated.

    The kernel legs swap (the spatial point is the concatenation (x, y) ->
    (y, x)) and the interface phase leg flips sign, recorded in the
    metadata for the caller assembling the phase.
    """
    n = a1.spatial_dim // 2

    def ev(x_cat, freq):
        x_cat = np.asarray(x_cat, dtype=float)
        swapped = np.concatenate([x_cat[n:], x_cat[:n]])
        return np.conj(a1.eval(swapped, freq))

    return Symbol(
        eval=ev,
        declared_class=a1.declared_class,
        freq_dim=a1.freq_dim,
        spatial_dim=a1.spatial_dim,
        support_cone=a1.support_cone,
        name=f"adjoint({a1.name})",
        meta={**a1.meta, "h_leg_sign": -a1.meta.get("h_leg_sign", 1)},
    )


@dataclass
class CompositionResult:
    """Two-branch outcome of composing adjoint and operator on the flowout."""

    p: Dyadic
    good_class: IplClass
    bad_class: IplClass
    good_amplitude: Symbol
    bad_amplitude: Symbol
    eps_lower_bound: float
    diagnostics: dict = field(default_factory=dict)
    good_kernel: Optional[KernelGrid] = None

    def manifest(self, path=None) -> str:
        payload = {
            "p": str(self.p),
            "good_class": repr(self.good_class),
            "bad_class": repr(self.bad_class),
            "eps_lower_bound": self.eps_lower_bound,
            "diagnostics": self.diagnostics,
        }
        text = json.dumps(payload, indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text


def compose_zero_section(
    a1,
    a2,
    n: int,
    h,
    consts: Optional[PartitionConstants] = None,
) -> CompositionResult:
    """Adjoint-times-operator composition for kernel amplitudes a1, a2.

    The amplitude orders are M_j = m_j - 1/2 for operator orders
    m_j < -1/2.  The scalar frequency arguments convolve into a joint
    amplitude; the frequency space splits by whether sigma - rho grad h
    stays elliptic.  On the elliptic part the inner reduction in
    (z, sigma_t) gives an amplitude in the (rho elliptic | sigma) two-block
    class of orders (M2, M1 + 1); on the degenerate part with sigma
    dominant the (z, sigma) branch gives orders (M1, M2 + 1); the leftover
    cone where sigma_t dominates is routed to the smoothness check.

    Order classes are attached from the exact composition arithmetic.
    """
    if consts is None:
        consts = PartitionConstants.from_delta()
    M1 = float(a1.order)
    M2 = float(a2.order)
    m1 = Dyadic.from_any(str(_half_up(M1)))
    m2 = Dyadic.from_any(str(_half_up(M2)))
    p, good_class, bad_class = predict_zero_section_orders(m1, m2, n)
    chi_good, chi_bad = build_good_bad(h)
    c1, c2 = consts.c[0], consts.c[1]

    def good_eval(x_cat, freq):
        # freq layout: (sigma ..., rho) with rho the trailing coordinate
        x_cat = np.asarray(x_cat, dtype=float)
        y = x_cat[n : 2 * n]
        sigma = np.atleast_2d(freq)[:, :n]
        rho = np.atleast_2d(freq)[:, n]
        grad = h.gradient(y[None, :])[0]
        sigma_t = sigma - rho[:, None] * grad[None, :]
        vals = a3_batch(a1, a2, sigma, sigma_t, rho)
        cut = chi_good(np.broadcast_to(y, sigma.shape), sigma, rho)
        return vals * cut

    def bad_eval(x_cat, freq):
        x_cat = np.asarray(x_cat, dtype=float)
        x = x_cat[:n]
        sigma_t = np.atleast_2d(freq)[:, :n]
        rho = np.atleast_2d(freq)[:, n]
        grad = h.gradient(x[None, :])[0]
        sigma = sigma_t + rho[:, None] * grad[None, :]
        vals = a3_batch(a1, a2, sigma, sigma_t, rho)
        cut = chi_bad(np.broadcast_to(x, sigma.shape), sigma, rho)
        ns = np.sqrt(np.sum(sigma * sigma, axis=-1) + rho * rho)
        nst = np.linalg.norm(sigma_t, axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(nst > 0, ns / nst, np.inf)
        dominant = smooth_step((ratio - c1) / (c2 - c1))
        return vals * cut * dominant

    good_sym = Symbol(
        eval=good_eval,
        declared_class=SymbolClass("symbol_valued", m=M2, m2=M1 + 1.0, elliptic_dim=1, elliptic_last=True),
        freq_dim=n + 1,
        spatial_dim=2 * n,
        support_cone=None,
        name="composition_good_branch",
    )
    bad_sym = Symbol(
        eval=bad_eval,
        declared_class=SymbolClass("symbol_valued", m=M1, m2=M2 + 1.0, elliptic_dim=1, elliptic_last=True),
        freq_dim=n + 1,
        spatial_dim=2 * n,
        support_cone=None,
        name="composition_bad_branch",
    )
    eps = 1.0 - 2.0 * c2
    return CompositionResult(
        p=p,
        good_class=good_class,
        bad_class=bad_class,
        good_amplitude=good_sym,
        bad_amplitude=bad_sym,
        eps_lower_bound=eps,
        diagnostics={"M1": M1, "M2": M2, "m1": str(m1), "m2": str(m2), "c2": c2},
    )


def _half_up(M: float):
    from fractions import Fraction

    return Fraction(M).limit_denominator(64) + Fraction(1, 2)


@dataclass
class Bad2Report:
    """Cutoff-doubling Cauchy test for the degenerate leftover cone."""

    R_ladder: np.ndarray
    values: Dict[str, np.ndarray]  # derivative label -> values along the ladder
    diffs: Dict[str, np.ndarray]
    shrink: Dict[str, np.ndarray]  # ratios of successive Cauchy differences
    passed: bool
    eps_lower_bound: float
    parts_count: int

    def to_json(self, path=None) -> str:
        payload = {
            "R_ladder": self.R_ladder.tolist(),
            "per_derivative": {
                k: {
                    "values_re": np.real(v).tolist(),
                    "diffs": self.diffs[k].tolist(),
                    "shrink": self.shrink[k].tolist(),
                }
                for k, v in self.values.items()
            },
            "pass": self.passed,
            "eps_lower_bound": self.eps_lower_bound,
            "integration_by_parts_count": self.parts_count,
        }
        text = json.dumps(payload, indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text


def _window_transform_table(n_table: int = 1 << 17, pad: float = 12.0):
    """Transform of the sharply-decaying convolution window on the z line."""
    from .symbols import SymbolWindow

    w_fn = SymbolWindow()
    s = -pad + 2.0 * pad * np.arange(n_table) / n_table
    ds = s[1] - s[0]
    w = w_fn(s)
    zeta = 2.0 * np.pi * np.fft.fftfreq(n_table, d=ds)
    table = np.fft.fft(w) * ds * np.exp(1j * zeta * pad)
    order = np.argsort(zeta)
    return zeta[order], np.real(table[order]), w_fn


def check_bad2_smoothness(
    a1,
    a2,
    n: int = 1,
    D: int = 2,
    h=None,
    consts: Optional[PartitionConstants] = None,
    R_ladder: Sequence[float] = (16.0, 32.0, 64.0, 128.0),
    x=None,
    y=None,
    shrink_factor: float = 2.0,
) -> Bad2Report:
    """Convergence of the leftover-cone kernel under frequency-cutoff doubling.

    On the cone where the middle frequency block dominates, the inner
    spatial integral against a smooth window turns into the window
    transform evaluated at sigma_t + rho e1 - sigma, whose argument is
    bounded below by eps |sigma_t| there; the truncated kernel value and
    its derivatives in the outer points (realized exactly as frequency
    moments) must then be Cauchy in the cutoff, with differences shrinking
    by at least ``shrink_factor`` per doubling.  Requires the flat
    interface (the window transform factors only for a constant conormal).
    """
    if consts is None:
        consts = PartitionConstants.from_delta()
    if h is not None and np.any(h.hessian(np.zeros((1, n))) != 0.0):
        raise DomainError("the leftover-cone check needs the flat interface")
    c2 = consts.c[1]
    eps = 1.0 - 2.0 * c2
    x = np.full(n, 0.08) if x is None else np.asarray(x, dtype=float)
    y = np.full(n, -0.05) if y is None else np.asarray(y, dtype=float)
    zeta_tab, w_tab, _ = _window_transform_table()

    def w_hat(zeta):
        return np.interp(zeta, zeta_tab, w_tab, left=0.0, right=0.0)

    gl_x, gl_w = np.polynomial.legendre.leggauss(12 if n == 1 else 8)
    gl_xs, gl_ws = np.polynomial.legendre.leggauss(16 if n == 1 else 6)

    def radial_shells(R, nodes, weights):
        bounds = [1.0]
        while bounds[-1] < R:
            bounds.append(min(2.0 * bounds[-1], R))
        rr, wr = [], []
        for a, b in zip(bounds[:-1], bounds[1:]):
            mid, half = 0.5 * (a + b), 0.5 * (b - a)
            rr.append(mid + half * nodes)
            wr.append(half * weights)
        return np.concatenate(rr), np.concatenate(wr)

    def sigma_t_nodes(R):
        """(points (m, n), weights (m,)) for the dominant block."""
        r, wr = radial_shells(R, gl_x, gl_w)
        if n == 1:
            pts = np.concatenate([-r[::-1], r])[:, None]
            return pts, np.concatenate([wr[::-1], wr])
        phis = 2.0 * np.pi * (np.arange(6) + 0.5) / 6
        pts = np.stack(
            [np.outer(r, np.cos(phis)).ravel(), np.outer(r, np.sin(phis)).ravel()], axis=-1
        )
        w = (np.outer(wr * r, np.full(6, 2.0 * np.pi / 6))).ravel()
        return pts, w

    def inner_nodes(scale):
        """sigma offsets within the cone of the given radius (per point)."""
        if n == 1:
            return (scale[:, None] * gl_xs)[..., None].reshape(len(scale), -1, 1), np.broadcast_to(
                scale[:, None] * gl_ws, (len(scale), len(gl_ws))
            )
        rr = 0.5 * (gl_xs + 1.0)
        wrr = 0.5 * gl_ws
        phis = 2.0 * np.pi * (np.arange(6) + 0.5) / 6
        rxy = np.stack(
            [np.outer(rr, np.cos(phis)).ravel(), np.outer(rr, np.sin(phis)).ravel()], axis=-1
        )
        wpolar = np.outer(wrr * rr, np.full(6, 2.0 * np.pi / 6)).ravel()
        pts = scale[:, None, None] * rxy[None, :, :]
        w = (scale**2)[:, None] * wpolar[None, :]
        return pts, w

    labels = ["d0"] + [f"dx{d}" for d in range(1, D + 1)] + [f"dy{d}" for d in range(1, D + 1)]
    values = {lab: [] for lab in labels}
    e1 = np.zeros(n)
    e1[0] = 1.0
    for R in R_ladder:
        st_pts, st_w = sigma_t_nodes(R)
        nst = np.linalg.norm(st_pts, axis=-1)
        rho_scaled = c2 * nst
        sig_pts_all, sig_w_all = inner_nodes(c2 * nst)
        totals = {lab: 0.0 + 0.0j for lab in labels}
        n_rho = len(gl_x)
        for k in range(n_rho):
            rho = rho_scaled * gl_x[k]
            w_rho = rho_scaled * gl_w[k]
            ST = np.repeat(st_pts, sig_pts_all.shape[1], axis=0)
            WS = np.repeat(st_w, sig_pts_all.shape[1])
            RR = np.repeat(rho, sig_pts_all.shape[1])
            WR = np.repeat(w_rho, sig_pts_all.shape[1])
            SG = sig_pts_all.reshape(-1, n)
            WG = sig_w_all.reshape(-1)
            zeta = ST + RR[:, None] * e1[None, :] - SG
            amp = np.empty(len(ST), dtype=complex)
            chunk = 8192
            for i in range(0, len(ST), chunk):
                sl = slice(i, i + chunk)
                amp[sl] = a3_batch(a1, a2, SG[sl], ST[sl], RR[sl])
            wtrans = np.prod(w_hat(zeta), axis=-1)
            joint = np.sqrt(np.sum(SG * SG, axis=-1) + RR**2)
            nst_rep = np.linalg.norm(ST, axis=-1)
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(nst_rep > 0, joint / nst_rep, np.inf)
            cone = 1.0 - smooth_step((ratio - consts.c[0]) / (c2 - consts.c[0]))
            base = WS * WR * WG * wtrans * amp * cone * np.exp(1j * (SG @ x - ST @ y))
            totals["d0"] += np.sum(base)
            for d in range(1, D + 1):
                totals[f"dx{d}"] += np.sum(base * (1j * SG[:, 0]) ** d)
                totals[f"dy{d}"] += np.sum(base * (-1j * ST[:, 0]) ** d)
        for lab in labels:
            values[lab].append(totals[lab])
    values = {k: np.asarray(v) for k, v in values.items()}
    diffs = {k: np.abs(np.diff(v)) for k, v in values.items()}
    shrink = {}
    passed = True
    for k, d in diffs.items():
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(d[1:] > 0, d[:-1] / np.maximum(d[1:], 1e-300), np.inf)
        shrink[k] = r
        passed = passed and bool(np.all(r >= shrink_factor))
    return Bad2Report(
        R_ladder=np.asarray(R_ladder, dtype=float),
        values=values,
        diffs=diffs,
        shrink=shrink,
        passed=passed,
        eps_lower_bound=eps,
        parts_count=D + n + 2,
    )


def iterated_regularity_diagnostic(
    K: KernelGrid,
    h,
    s: float = 0.5,
    window: Optional[Callable] = None,
    margin: float = 0.5,
) -> dict:
    """Apply the characteristic first-order families to a sampled kernel and
    compare the Sobolev norm growth against a generic first-order operator.

    A generic first-order operator loses one derivative per application; the
    characteristic families (interface value times |D|, leg difference
    times |D|) carry factors vanishing where the kernel's singular energy
    sits, so their per-application growth must stay well below the generic
    one.  Passes when both one and two applications grow at most
    ``margin`` times the generic rate.
    """
    from .partition import bump_window

    x, yv = K.x_axis, K.y_axis
    N = len(x)
    if N & (N - 1) or len(yv) != N:
        raise DomainError("diagnostic needs a square power-of-two grid")
    Lbox = K.box_length
    if window is None:
        window = lambda t: bump_window(t, 0.35 * Lbox / 2, 0.75 * Lbox / 2)
    wmat = np.outer(window(x), window(yv))
    k = 2.0 * np.pi * np.fft.fftfreq(N, d=Lbox / N)

    def abs_dx(mat):
        return np.fft.ifft(np.abs(k)[:, None] * np.fft.fft(mat, axis=0), axis=0)

    hx = h.value(x[:, None])

    def gen_interface(mat):
        return hx[:, None] * abs_dx(mat)

    def gen_leg_difference(mat):
        return (x[:, None] - yv[None, :]) * abs_dx(mat)

    def norm2d(mat):
        f = np.fft.fft2(wmat * mat)
        kk = np.sqrt(1.0 + k[:, None] ** 2 + k[None, :] ** 2)
        val = np.sqrt(np.sum((kk ** (2 * s)) * np.abs(f / N**2) ** 2) * Lbox**2)
        return float(val)

    norm0 = norm2d(K.values)
    gen1 = norm2d(abs_dx(K.values))
    gen2 = norm2d(abs_dx(abs_dx(K.values)))
    generic_rate = max(gen1 / norm0, np.sqrt(gen2 / norm0)) if norm0 > 0 else np.inf
    report = {"s": s, "norm0": norm0, "generic_rate": generic_rate, "families": {}}
    ok = True
    for name, gen in [("interface", gen_interface), ("leg_difference", gen_leg_difference)]:
        n1 = norm2d(gen(K.values))
        n2 = norm2d(gen(gen(K.values)))
        r1 = n1 / norm0 if norm0 > 0 else np.inf
        r2 = np.sqrt(n2 / norm0) if norm0 > 0 else np.inf
        stable = np.isfinite(n1) and np.isfinite(n2) and max(r1, r2) <= margin * generic_rate
        ok = ok and stable
        report["families"][name] = {
            "norm1": n1,
            "norm2": n2,
            "rate1": r1,
            "rate2": r2,
            "pass": bool(stable),
        }
    report["pass"] = bool(ok)
    return report
