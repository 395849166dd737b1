"""Oscillatory kernel evaluation: direct quadrature, critical-point reduction,
phase Hessians, kernel application, and spectral Sobolev norms.

Conventions.  Every inner frequency integral carries the 1/(2*pi)**dim
normalization, so the critical-point reduction of an inner (frequency,
spatial) pair needs no constant: the reduced value is the amplitude at the
critical point times exp(i * phase there) times |det Hessian|**(-1/2), and
the block Hessians appearing here have |det| = 1 identically.

Amplitudes are matrix callables ``a(w_sp, w_fr) -> (m_sp, m_fr)`` over node
sets for the inner spatial and inner frequency blocks; phases expose the
matching ``value_matrix`` plus gradient, Hessian, and the closed-form
critical point.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import GridError, HessianError, NumericsError, QuadratureError, SupportError
from .util import fit_loglog_slope

__all__ = [
    "Phase",
    "reduction_phase",
    "composition_phase",
    "phase_consistency",
    "hessian_assemble",
    "gauss_dyadic_nodes",
    "eval_kernel_direct",
    "eval_kernel_stationary",
    "stationary_decay_check",
    "DecayReport",
    "KernelGrid",
    "apply_kernel",
    "SobolevSpec",
    "sobolev_norm",
]


@dataclass
class Phase:
    """Phase of an oscillatory integral in one inner (spatial, frequency) pair.

    ``block_order`` records which block comes first in gradient / Hessian
    coordinates.  ``value_matrix`` evaluates the phase on the product of a
    spatial node set and a frequency node set.
    """

    name: str
    inner_spatial_dim: int
    inner_freq_dim: int
    value: Callable  # (w_sp (m, n), w_fr (m, n)) -> (m,)
    value_matrix: Callable  # (w_sp (ms, n), w_fr (mf, n)) -> (ms, mf)
    grad: Callable  # (w_sp (n,), w_fr (n,)) -> (2n,)
    hessian: Callable  # (w_sp (n,), w_fr (n,)) -> (2n, 2n)
    critical: Callable  # () -> (w_sp*, w_fr*)
    block_order: str  # "freq_first" or "spatial_first"
    freq_normalized: bool = True
    outer: dict = field(default_factory=dict)


def reduction_phase(h, x, z, xi, theta: float) -> Phase:
    """Phase (x - y) . xi + (y - z) . eta + h(y) theta in inner (eta, y).

    The unique critical point is y = z, eta = xi - theta * grad h(z); the
    Hessian blocks are [[0, I], [I, theta * Hh(y)]] in (eta, y) order.
    """
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    xi = np.asarray(xi, dtype=float)
    n = len(x)

    def value(y, eta):
        y = np.atleast_2d(y)
        eta = np.atleast_2d(eta)
        return (x - y) @ xi + np.sum((y - z) * eta, axis=-1) + h.value(y) * theta

    def value_matrix(y, eta):
        y = np.atleast_2d(y)
        eta = np.atleast_2d(eta)
        col = (x - y) @ xi + h.value(y) * theta
        return col[:, None] + (y - z) @ eta.T

    def grad(y, eta):
        y1 = y[None, :]
        d_eta = y - z
        d_y = -xi + eta + h.gradient(y1)[0] * theta
        return np.concatenate([d_eta, d_y])

    def hessian(y, eta):
        H = np.zeros((2 * n, 2 * n))
        H[:n, n:] = np.eye(n)
        H[n:, :n] = np.eye(n)
        H[n:, n:] = theta * h.hessian(y[None, :])[0]
        return H

    def critical():
        y_star = z.copy()
        eta_star = xi - theta * h.gradient(z[None, :])[0]
        return y_star, eta_star

    return Phase(
        name="reduction",
        inner_spatial_dim=n,
        inner_freq_dim=n,
        value=value,
        value_matrix=value_matrix,
        grad=grad,
        hessian=hessian,
        critical=critical,
        block_order="freq_first",
        outer={"x": x, "z": z, "xi": xi, "theta": theta},
    )


def composition_phase(h, x, y, outer_freq, rho: float, branch: str) -> Phase:
    """Phase (x - z) . sigma + (z - y) . sigma_t + h(z) rho, reduced in z and
    one frequency block chosen by ``branch``.

    branch 'good': outer_freq is sigma, inner block is sigma_t; critical
    point z = y, sigma_t = sigma - rho grad h(y); Hessian
    [[rho Hh, I], [I, 0]] in (z, sigma_t) order.

    branch 'bad': outer_freq is sigma_t, inner block is sigma; critical
    point z = x, sigma = sigma_t + rho grad h(x); Hessian
    [[rho Hh, -I], [-I, 0]].
    """
    if branch not in ("good", "bad"):
        raise ValueError("branch must be 'good' or 'bad'")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    outer_freq = np.asarray(outer_freq, dtype=float)
    n = len(x)
    sgn = 1.0 if branch == "good" else -1.0

    def value(zpts, fr):
        zpts = np.atleast_2d(zpts)
        fr = np.atleast_2d(fr)
        if branch == "good":
            sigma, sigma_t = outer_freq, fr
            return (x - zpts) @ sigma + np.sum((zpts - y) * sigma_t, axis=-1) + h.value(zpts) * rho
        sigma, sigma_t = fr, outer_freq
        return np.sum((x - zpts) * sigma, axis=-1) + (zpts - y) @ sigma_t + h.value(zpts) * rho

    def value_matrix(zpts, fr):
        zpts = np.atleast_2d(zpts)
        fr = np.atleast_2d(fr)
        if branch == "good":
            col = (x - zpts) @ outer_freq + h.value(zpts) * rho
            return col[:, None] + (zpts - y) @ fr.T
        col = (zpts - y) @ outer_freq + h.value(zpts) * rho
        return col[:, None] + (x - zpts) @ fr.T

    def grad(zpt, fr):
        z1 = zpt[None, :]
        if branch == "good":
            sigma, sigma_t = outer_freq, fr
        else:
            sigma, sigma_t = fr, outer_freq
        d_z = -sigma + sigma_t + rho * h.gradient(z1)[0]
        d_fr = (zpt - y) if branch == "good" else (x - zpt)
        return np.concatenate([d_z, d_fr])

    def hessian(zpt, fr):
        H = np.zeros((2 * n, 2 * n))
        H[:n, :n] = rho * h.hessian(zpt[None, :])[0]
        H[:n, n:] = sgn * np.eye(n)
        H[n:, :n] = sgn * np.eye(n)
        return H

    def critical():
        if branch == "good":
            z_star = y.copy()
            fr_star = outer_freq - rho * h.gradient(y[None, :])[0]
        else:
            z_star = x.copy()
            fr_star = outer_freq + rho * h.gradient(x[None, :])[0]
        return z_star, fr_star

    return Phase(
        name=f"composition_{branch}",
        inner_spatial_dim=n,
        inner_freq_dim=n,
        value=value,
        value_matrix=value_matrix,
        grad=grad,
        hessian=hessian,
        critical=critical,
        block_order="spatial_first",
        outer={"x": x, "y": y, "outer_freq": outer_freq, "rho": rho, "branch": branch},
    )


def _phase_point_value(phase: Phase, w_sp, w_fr) -> float:
    return float(phase.value(w_sp[None, :], w_fr[None, :])[0])


def phase_consistency(phase: Phase, rng=None, n_samples: int = 10, scale: float = 1.0, tol: float = 1e-5):
    """Max relative error of grad and hessian against finite differences."""
    rng = np.random.default_rng(rng)
    n = phase.inner_spatial_dim
    worst = 0.0
    for _ in range(n_samples):
        w_sp = rng.uniform(-0.5, 0.5, n)
        w_fr = rng.uniform(-1.0, 1.0, n) * scale

        def pack(v):
            if phase.block_order == "freq_first":
                return v[n:], v[:n]  # (spatial, freq) from (freq, spatial) coords
            return v[:n], v[n:]

        w = np.concatenate([w_fr, w_sp]) if phase.block_order == "freq_first" else np.concatenate([w_sp, w_fr])
        g = phase.grad(w_sp, w_fr)
        H = phase.hessian(w_sp, w_fr)
        step = 1e-4 * max(1.0, scale)
        for i in range(2 * n):
            e = np.zeros(2 * n)
            e[i] = step
            sp_p, fr_p = pack(w + e)
            sp_m, fr_m = pack(w - e)
            fd = (_phase_point_value(phase, sp_p, fr_p) - _phase_point_value(phase, sp_m, fr_m)) / (2 * step)
            ref = max(1.0, abs(g[i]), scale)
            worst = max(worst, abs(fd - g[i]) / ref)
            for j in range(2 * n):
                e2 = np.zeros(2 * n)
                e2[j] = step
                pp = pack(w + e + e2)
                pm = pack(w + e - e2)
                mp = pack(w - e + e2)
                mm = pack(w - e - e2)
                fd2 = (
                    _phase_point_value(phase, *pp)
                    - _phase_point_value(phase, *pm)
                    - _phase_point_value(phase, *mp)
                    + _phase_point_value(phase, *mm)
                ) / (4 * step * step)
                worst = max(worst, abs(fd2 - H[i, j]) / max(1.0, abs(H[i, j])))
    return worst


def hessian_assemble(phase: Phase, w_sp=None, w_fr=None, det_tol: float = 1e-10):
    """Phase Hessian at a point (default: the critical point) and its block inverse.

    Raises :class:`HessianError` unless |det| = 1 within ``det_tol`` and the
    closed-form block inverse multiplies back to the identity.
    """
    if w_sp is None or w_fr is None:
        w_sp, w_fr = phase.critical()
    H = phase.hessian(np.asarray(w_sp, dtype=float), np.asarray(w_fr, dtype=float))
    m = H.shape[0]
    n = m // 2
    sign, logdet = np.linalg.slogdet(H)
    if not np.isfinite(logdet) or abs(logdet) > det_tol:
        raise HessianError(f"|det| = exp({logdet:.3e}) differs from 1")
    A = H[:n, :n]
    B = H[:n, n:]
    D = H[n:, n:]
    Hinv = np.zeros_like(H)
    if np.allclose(A, 0.0):
        # [[0, B], [B, D]] with B = +-I: inverse [[-B D B, B], [B, 0]]
        Hinv[:n, :n] = -B @ D @ B
        Hinv[:n, n:] = B
        Hinv[n:, :n] = B
    elif np.allclose(D, 0.0):
        # [[A, B], [B, 0]] with B = +-I: inverse [[0, B], [B, -B A B]]
        Hinv[:n, n:] = B
        Hinv[n:, :n] = B
        Hinv[n:, n:] = -B @ A @ B
    else:
        Hinv = np.linalg.inv(H)
    if np.max(np.abs(H @ Hinv - np.eye(m))) > 1e-12:
        raise HessianError("block inverse check failed")
    return H, Hinv


def gauss_dyadic_nodes(R: float, nodes_per_panel: int = 24, n_levels: int = 7):
    """Symmetric 1-D quadrature on [-R, R]: dyadic panels with Gauss nodes.

    Panel boundaries 0, R/2**(n_levels-1), ..., R/2, R, mirrored to the
    negative axis.
    """
    bounds = [0.0] + [R * 2.0 ** (k - n_levels + 1) for k in range(n_levels)]
    gl_x, gl_w = np.polynomial.legendre.leggauss(nodes_per_panel)
    nodes, weights = [], []
    for a, b in zip(bounds[:-1], bounds[1:]):
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        nodes.append(mid + half * gl_x)
        weights.append(half * gl_w)
    nodes = np.concatenate(nodes)
    weights = np.concatenate(weights)
    nodes = np.concatenate([-nodes[::-1], nodes])
    weights = np.concatenate([weights[::-1], weights])
    return nodes, weights


def gauss_uniform_nodes(R: float, nodes_per_panel: int = 24, n_panels: int = 16):
    """Symmetric 1-D quadrature on [-R, R]: uniform panels with Gauss nodes.

    Preferred when the integrand oscillates at a roughly uniform rate; the
    dyadic rule is preferred for conic symbol decay.
    """
    bounds = np.linspace(0.0, R, n_panels + 1)
    gl_x, gl_w = np.polynomial.legendre.leggauss(nodes_per_panel)
    nodes, weights = [], []
    for a, b in zip(bounds[:-1], bounds[1:]):
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        nodes.append(mid + half * gl_x)
        weights.append(half * gl_w)
    nodes = np.concatenate(nodes)
    weights = np.concatenate(weights)
    nodes = np.concatenate([-nodes[::-1], nodes])
    weights = np.concatenate([weights[::-1], weights])
    return nodes, weights


def _tensor_nodes(nodes, weights, dim):
    if dim == 1:
        return nodes[:, None], weights
    grids = np.meshgrid(*([nodes] * dim), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    wgrids = np.meshgrid(*([weights] * dim), indexing="ij")
    w = np.prod(np.stack([g.ravel() for g in wgrids], axis=-1), axis=-1)
    return pts, w


def eval_kernel_direct(
    amplitude: Callable,
    phase: Phase,
    R: float = 128.0,
    n_spatial: int = 1024,
    spatial_half_width: float = 1.0,
    nodes_per_panel: int = 24,
    n_levels: int = 7,
    freq_rule: str = "dyadic",
    n_panels: int = 16,
    refine: bool = False,
    refine_tol: float = 1e-3,
) -> complex:
    """Truncated iterated quadrature of exp(i phase) * amplitude.

    The inner spatial block is integrated with a uniform midpoint rule over
    [-spatial_half_width, spatial_half_width]**n (the amplitude is expected
    to vanish smoothly at that boundary); the inner frequency block uses
    Gauss panels (dyadic or uniform) up to the cutoff R with the
    1/(2*pi)**n measure.

    With ``refine`` the node counts are doubled and a
    :class:`QuadratureError` is raised if the two values differ by more
    than ``refine_tol`` relative to the larger magnitude.
    """

    def run(n_sp, npp):
        n = phase.inner_spatial_dim
        axis = (-spatial_half_width + (np.arange(n_sp) + 0.5) * 2 * spatial_half_width / n_sp)
        sp_pts, sp_w = _tensor_nodes(axis, np.full(n_sp, 2 * spatial_half_width / n_sp), n)
        if freq_rule == "dyadic":
            fr_nodes, fr_w = gauss_dyadic_nodes(R, npp, n_levels)
        elif freq_rule == "uniform":
            fr_nodes, fr_w = gauss_uniform_nodes(R, npp, n_panels)
        else:
            raise ValueError(f"unknown frequency rule {freq_rule!r}")
        fr_pts, fr_wts = _tensor_nodes(fr_nodes, fr_w, phase.inner_freq_dim)
        total = 0.0 + 0.0j
        chunk = max(1, int(4.0e6 / max(len(fr_pts), 1)))
        for i in range(0, len(sp_pts), chunk):
            sp = sp_pts[i : i + chunk]
            ph = phase.value_matrix(sp, fr_pts)
            amp = amplitude(sp, fr_pts)
            total += np.sum(sp_w[i : i + chunk, None] * fr_wts[None, :] * amp * np.exp(1j * ph))
        if phase.freq_normalized:
            total /= (2.0 * np.pi) ** phase.inner_freq_dim
        return total

    val = run(n_spatial, nodes_per_panel)
    if not np.isfinite(val):
        raise NumericsError("kernel quadrature produced a non-finite value")
    if refine:
        val2 = run(2 * n_spatial, 2 * nodes_per_panel)
        if abs(val2 - val) > refine_tol * max(1.0, abs(val2)):
            raise QuadratureError(f"quadrature not converged: {val:.6e} vs {val2:.6e}")
        return val2
    return val


def eval_kernel_stationary(
    amplitude: Callable,
    phase: Phase,
    support: Optional[Callable] = None,
) -> complex:
    """Leading critical-point value: amplitude there times the phase factor.

    ``amplitude`` is the same matrix callable the direct evaluator takes;
    it is probed at the single critical point.  If ``support`` is given and
    rejects the critical point, :class:`SupportError` is raised.
    """
    w_sp, w_fr = phase.critical()
    if support is not None and not bool(support(w_sp, w_fr)):
        raise SupportError("critical point lies outside the amplitude support")
    _, _ = hessian_assemble(phase)  # asserts unit determinant
    a = amplitude(w_sp[None, :], w_fr[None, :])
    ph = _phase_point_value(phase, w_sp, w_fr)
    return complex(a[0, 0] * np.exp(1j * ph))


@dataclass
class DecayReport:
    scales: np.ndarray
    ratios: np.ndarray
    slope: float
    intercept: float


def stationary_decay_check(
    make_case: Callable,
    leading_bound: Callable,
    scales: Sequence[float],
    fd_scale: float = 1e-3,
) -> DecayReport:
    """Second-derivative transport term at the critical point across scales.

    ``make_case(scale)`` returns (phase, amplitude); the operator
    div(Hinv grad) in the inner variables is applied to the amplitude by
    finite differences and evaluated at the critical point.  The report
    fits the log-log slope of |L a| / leading_bound(scale).
    """
    ratios = []
    for lam in scales:
        phase, amplitude = make_case(lam)
        w_sp, w_fr = phase.critical()
        H, Hinv = hessian_assemble(phase)
        n = phase.inner_spatial_dim
        m = 2 * n

        def coords(v):
            if phase.block_order == "freq_first":
                return v[n:], v[:n]
            return v[:n], v[n:]

        base = np.concatenate([w_fr, w_sp]) if phase.block_order == "freq_first" else np.concatenate([w_sp, w_fr])
        steps = np.empty(m)
        for i in range(m):
            is_freq = (i < n) if phase.block_order == "freq_first" else (i >= n)
            steps[i] = max(fd_scale * lam, fd_scale) if is_freq else fd_scale

        def a_at(v):
            sp, fr = coords(v)
            return amplitude(sp[None, :], fr[None, :])[0, 0]

        La = 0.0 + 0.0j
        for i in range(m):
            for j in range(m):
                if Hinv[i, j] == 0.0:
                    continue
                ei = np.zeros(m)
                ei[i] = steps[i]
                ej = np.zeros(m)
                ej[j] = steps[j]
                if i == j:
                    second = (a_at(base + ei) - 2.0 * a_at(base) + a_at(base - ei)) / steps[i] ** 2
                else:
                    second = (
                        a_at(base + ei + ej) - a_at(base + ei - ej) - a_at(base - ei + ej) + a_at(base - ei - ej)
                    ) / (4.0 * steps[i] * steps[j])
                La += Hinv[i, j] * second
        ratios.append(abs(La) / leading_bound(lam))
    ratios = np.asarray(ratios)
    if np.all(ratios > 0):
        slope, intercept = fit_loglog_slope(np.asarray(scales, dtype=float), ratios)
    else:
        slope, intercept = float("-inf"), 0.0
    return DecayReport(scales=np.asarray(scales, dtype=float), ratios=ratios, slope=slope, intercept=intercept)


# ---------------------------------------------------------------------------
# Sampled kernels
# ---------------------------------------------------------------------------

_KG_MAGIC = b"KGRD"
_KG_VERSION = 1


@dataclass
class KernelGrid:
    """Complex kernel samples on a product of two 1-D spatial legs."""

    x_axis: np.ndarray
    y_axis: np.ndarray
    values: np.ndarray
    box_length: float
    R: float
    rule_id: int = 0
    n: int = 1

    def __post_init__(self):
        if self.values.shape != (len(self.x_axis), len(self.y_axis)):
            raise GridError("kernel value shape does not match the axes")

    def save(self, path) -> None:
        header = struct.pack(
            "<4sIIIIddI",
            _KG_MAGIC,
            _KG_VERSION,
            self.n,
            len(self.x_axis),
            len(self.y_axis),
            self.box_length,
            self.R,
            self.rule_id,
        )
        data = np.ascontiguousarray(self.values.astype(np.complex64))
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(self.x_axis.astype("<f8").tobytes())
            fh.write(self.y_axis.astype("<f8").tobytes())
            fh.write(data.astype("<c8").tobytes())

    @classmethod
    def load(cls, path) -> "KernelGrid":
        with open(path, "rb") as fh:
            head = fh.read(struct.calcsize("<4sIIIIddI"))
            magic, version, n, nx, ny, box_length, R, rule_id = struct.unpack("<4sIIIIddI", head)
            if magic != _KG_MAGIC or version != _KG_VERSION:
                raise GridError("not a kernel grid file")
            x_axis = np.frombuffer(fh.read(8 * nx), dtype="<f8").copy()
            y_axis = np.frombuffer(fh.read(8 * ny), dtype="<f8").copy()
            values = np.frombuffer(fh.read(8 * nx * ny), dtype="<c8").reshape(nx, ny).astype(np.complex128)
        return cls(x_axis=x_axis, y_axis=y_axis, values=values, box_length=box_length, R=R, rule_id=rule_id, n=n)

    def export_slice_csv(self, path, row: int) -> None:
        import csv

        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["y", "re", "im"])
            for yj, v in zip(self.y_axis, self.values[row]):
                writer.writerow([yj, np.real(v), np.imag(v)])


def _trapezoid_weights(axis: np.ndarray) -> np.ndarray:
    w = np.zeros_like(axis)
    w[1:-1] = 0.5 * (axis[2:] - axis[:-2])
    w[0] = 0.5 * (axis[1] - axis[0])
    w[-1] = 0.5 * (axis[-1] - axis[-2])
    return w


def apply_kernel(K: KernelGrid, f: np.ndarray, periodic: bool = True) -> np.ndarray:
    """Contract the second leg against sampled f with trapezoid weights."""
    f = np.asarray(f)
    if f.shape != K.y_axis.shape:
        raise GridError(f"function has {f.shape}, kernel leg has {K.y_axis.shape}")
    if periodic:
        w = np.full_like(K.y_axis, K.y_axis[1] - K.y_axis[0])
    else:
        w = _trapezoid_weights(K.y_axis)
    return K.values @ (w * f)


@dataclass
class FidelityReport:
    """Direct-vs-critical-point comparison across an outer frequency ladder."""

    scales: np.ndarray
    direct: np.ndarray
    stationary: np.ndarray
    rel_errors: np.ndarray
    slope: float
    hessian_dets: np.ndarray


def reduction_fidelity(
    h,
    freq_profile: Callable,
    y_profile: Callable,
    y_window: Callable,
    scales: Sequence[float],
    tau_ratio: float = 0.3,
    x=None,
    z=None,
    R_factor: float = 3.0,
    spatial_half_width: float = 1.2,
    n_spatial: int = 1400,
    nodes_per_panel: int = 24,
    refine: bool = False,
) -> FidelityReport:
    """Compare truncated quadrature with the critical-point value for the
    second-derivative kernel reduction, over outer frequency magnitudes.

    The amplitude is the product form -(xi . eta) * y_profile(y) *
    freq_profile(theta) * y_window(y), with the one-dimensional flat
    interface and outer frequency (xi, theta) = scale * (1, tau_ratio) /
    norm.  The relative error decays with the first correction term of the
    expansion; the report carries the fitted log-log slope.
    """
    x = np.array([0.12]) if x is None else np.asarray(x, dtype=float)
    z = x.copy() if z is None else np.asarray(z, dtype=float)
    scales = np.asarray(scales, dtype=float)
    direct_vals, stat_vals, dets = [], [], []
    for lam in scales:
        xi = lam / np.hypot(1.0, tau_ratio)
        theta = tau_ratio * xi
        phase = reduction_phase(h, x, z, np.array([xi]), theta)
        f_theta = complex(freq_profile(theta))

        def amplitude(y_nodes, eta_nodes, f_theta=f_theta, xi=xi):
            prof = (y_profile(y_nodes[:, 0]) * y_window(y_nodes[:, 0])) * f_theta
            return np.outer(prof, -xi * eta_nodes[:, 0])

        R = R_factor * lam
        n_panels = max(8, int(0.5 * R * (spatial_half_width + abs(float(z[0]))) / nodes_per_panel))
        val_d = eval_kernel_direct(
            amplitude,
            phase,
            R=R,
            n_spatial=n_spatial,
            spatial_half_width=spatial_half_width,
            nodes_per_panel=nodes_per_panel,
            freq_rule="uniform",
            n_panels=n_panels,
            refine=refine,
        )
        val_s = eval_kernel_stationary(amplitude, phase)
        H, _ = hessian_assemble(phase)
        dets.append(abs(np.linalg.det(H)))
        direct_vals.append(val_d)
        stat_vals.append(val_s)
    direct_vals = np.asarray(direct_vals)
    stat_vals = np.asarray(stat_vals)
    rel = np.abs(direct_vals - stat_vals) / np.abs(stat_vals)
    slope, _ = fit_loglog_slope(scales, np.maximum(rel, 1e-300))
    return FidelityReport(
        scales=scales,
        direct=direct_vals,
        stationary=stat_vals,
        rel_errors=rel,
        slope=slope,
        hessian_dets=np.asarray(dets),
    )


@dataclass(frozen=True)
class SobolevSpec:
    """Order and sampling for a spectral Sobolev norm on a periodic box."""

    s: float
    grid_size: int
    box_length: float

    def __post_init__(self):
        if self.grid_size & (self.grid_size - 1):
            raise GridError("grid size must be a power of two")


def sobolev_norm(f: np.ndarray, spec: SobolevSpec) -> float:
    """(sum over modes of <k>**(2s) |f_hat(k)|**2)**(1/2), L2-consistent.

    ``f`` is sampled on the uniform periodic grid of ``spec.grid_size``
    points over a box of length ``spec.box_length``; at s = 0 this is the
    L2 norm of the trigonometric interpolant.
    """
    f = np.asarray(f)
    if len(f) != spec.grid_size:
        raise GridError("sample count does not match the spec")
    c = np.fft.fft(f) / spec.grid_size
    k = 2.0 * np.pi * np.fft.fftfreq(spec.grid_size, d=spec.box_length / spec.grid_size)
    weights = (1.0 + k * k) ** spec.s
    val = spec.box_length * np.sum(weights * np.abs(c) ** 2)
    if not np.isfinite(val):
        raise NumericsError("non-finite Sobolev norm")
    return float(np.sqrt(val))
