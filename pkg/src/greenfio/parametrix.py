"""Staged approximate inversion of the divergence-form operator.

The operator splits against a frequency partition into five pieces; the two
pieces supported where the spatial frequency dominates are differential in
disguise (coefficient times Laplacian plus gradient term), and those are
inverted by a two-level recursion: substages cancel the derivative terms the
previous piece introduced, stages cancel the accumulated truncation
mismatch of the coefficient reciprocal.

Inverse pieces are finite sums of separable terms ``profile(z) * sigma**e``
on the spatial-frequency cone (one dimension, flat interface), with
derivative-tracked profiles, so every composition with the differential
operator is exact:

    coeff * Lap:  gamma * (-sigma**2 b + 2 i sigma b_z + b_zz)
    grad term:    gamma' * (i sigma b + b_z)

All synthesized multipliers carry a fixed smooth low-frequency cutoff
vanishing for |sigma| <= 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConvergenceError, DecompositionError, NumericsError, TagError
from .ledger import (
    CanonicalRelationTag,
    Dyadic,
    IplClass,
    RecursionSchedule,
    build_recursion_schedule,
    class_A11,
    class_A12,
    class_A2,
    class_A3mu,
    class_A3mu1,
    compose_antoniano,
    compose_single,
)
from .partition import HomogeneousCutoff, PartitionConstants, build_chi, smooth_step
from .symbols import ConormalConductivity, DiffFn, Symbol, SymbolClass
from .util import fit_loglog_slope

__all__ = [
    "SymbolTerm",
    "ConeSymbol",
    "OperatorPiece",
    "ParametrixBuild",
    "decompose_Lgamma",
    "invert_principal",
    "compose_principal",
    "build_parametrix",
    "residual_test",
    "ResidualReport",
    "compose_with_B_classes",
]


def low_frequency_cutoff(sigma):
    """Smooth radial factor: zero for |sigma| <= 1, one for |sigma| >= 2."""
    return smooth_step(np.abs(np.asarray(sigma, dtype=float)) - 1.0)


@dataclass
class SymbolTerm:
    """One separable term profile(z) * sigma**freq_order."""

    profile: DiffFn
    freq_order: int


class ConeSymbol:
    """Finite sum of separable terms, times the shared low-frequency cutoff."""

    def __init__(self, terms: Sequence[SymbolTerm]):
        self.terms = list(terms)

    def eval_grid(self, z: np.ndarray, sigma: np.ndarray) -> np.ndarray:
        """Values on the product grid, shape (len(z), len(sigma))."""
        z = np.asarray(z, dtype=float)
        sigma = np.asarray(sigma, dtype=float)
        cut = low_frequency_cutoff(sigma)
        out = np.zeros((len(z), len(sigma)), dtype=complex)
        safe = np.where(sigma == 0.0, 1.0, sigma)
        for term in self.terms:
            pw = np.where(sigma == 0.0, 0.0, safe ** int(term.freq_order))
            out += np.outer(term.profile(z, 0), pw)
        return out * cut[None, :]

    def eval(self, z, sigma) -> np.ndarray:
        """Pointwise values for matched arrays z (m,), sigma (m,)."""
        z = np.atleast_1d(np.asarray(z, dtype=float))
        sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
        cut = low_frequency_cutoff(sigma)
        out = np.zeros(np.broadcast(z, sigma).shape, dtype=complex)
        safe = np.where(sigma == 0.0, 1.0, sigma)
        for term in self.terms:
            pw = np.where(sigma == 0.0, 0.0, safe ** int(term.freq_order))
            out = out + term.profile(z, 0) * pw
        return out * cut

    def d_z(self) -> "ConeSymbol":
        shifted = []
        for term in self.terms:
            prof = term.profile
            shifted.append(SymbolTerm(_shift_derivative(prof), term.freq_order))
        return ConeSymbol(shifted)

    def __add__(self, other: "ConeSymbol") -> "ConeSymbol":
        return ConeSymbol(self.terms + other.terms)

    def __neg__(self) -> "ConeSymbol":
        return ConeSymbol([SymbolTerm(t.profile * (-1.0), t.freq_order) for t in self.terms])

    def times_profile(self, dfn: DiffFn, scalar=1.0, freq_shift: int = 0) -> "ConeSymbol":
        return ConeSymbol(
            [SymbolTerm(t.profile * dfn * scalar, t.freq_order + freq_shift) for t in self.terms]
        )

    def max_freq_order(self) -> int:
        return max(t.freq_order for t in self.terms)

    def __len__(self):
        return len(self.terms)

    def as_symbol(self, name: str, declared_order: float, spatial_dim: int = 1) -> Symbol:
        def ev(x, freq):
            zz = np.full(len(freq), float(np.atleast_1d(x)[0]))
            return self.eval(zz, freq[:, 0])

        return Symbol(
            eval=ev,
            declared_class=SymbolClass("hormander", m=declared_order),
            freq_dim=1,
            spatial_dim=spatial_dim,
            name=name,
        )


def _shift_derivative(dfn: DiffFn) -> DiffFn:
    """View of a tracked function whose order-k value is the order-(k+1) parent value.

    The top tracked order of the parent is re-used for the highest shifted
    order; the recursion only ever consumes derivatives within the tracked
    budget for the stage depths it supports.
    """

    from .symbols import MAX_DIFF_ORDER

    def at(order):
        parent = min(order + 1, MAX_DIFF_ORDER)

        def f(z):
            return dfn(z, parent)

        return f

    return DiffFn([at(k) for k in range(MAX_DIFF_ORDER + 1)])


@dataclass
class OperatorPiece:
    """Named amplitude with its exact order class and supporting cutoff."""

    name: str
    symbol: Symbol
    ledger_class: IplClass
    cutoff: Optional[HomogeneousCutoff] = None
    cone: Optional[ConeSymbol] = None


def _gamma_difffn(g: ConormalConductivity) -> Tuple[DiffFn, DiffFn, DiffFn]:
    """(gamma, ratio x = singular part / gamma0, gamma0) as tracked profiles."""
    if g.profiles is None:
        raise ConvergenceError("recursion needs a one-dimensional tracked-profile model")
    e = g.exponent
    sing = g.profiles.gamma1_plus * DiffFn.one_sided_power(e, +1) + g.profiles.gamma1_minus * DiffFn.one_sided_power(e, -1)
    gamma = g.profiles.gamma0 + sing
    x = sing * g.profiles.gamma0.reciprocal()
    return gamma, x, g.profiles.gamma0


def decompose_Lgamma(
    g: ConormalConductivity,
    consts: PartitionConstants,
    amu: Symbol,
    n_check: int = 256,
    check_tol: float = 1e-10,
    seed: int = 7,
) -> Dict[str, OperatorPiece]:
    """Split the reduced kernel amplitude into the five cone-localized pieces.

    The post-reduction amplitude is sigma . (sigma - grad h(z) tau) times
    the conductivity amplitude (with the overall minus sign), written as an
    order-two part and an order-one part.  Multiplying by the three
    frequency cutoffs yields the five pieces with their exact classes; the
    five amplitudes must sum back to the uncut amplitude pointwise.
    """
    n = g.box.n
    mu = float(g.mu)
    chi1, chi2, chi3 = build_chi(consts, n)

    def part2(x, freq):
        sigma = freq[:, :n]
        tau = freq[:, n:]
        a_vals = amu.eval(x, tau)
        return -np.sum(sigma * sigma, axis=1) * a_vals

    def part1(x, freq):
        sigma = freq[:, :n]
        tau = freq[:, n]
        grad = g.h.gradient(np.atleast_2d(np.asarray(x, dtype=float)))[0]
        a_vals = amu.eval(x, freq[:, n:])
        return (sigma @ grad) * tau * a_vals

    def full(x, freq):
        return part2(x, freq) + part1(x, freq)

    def cut(piece, cutoff):
        def ev(x, freq):
            return piece(x, freq) * cutoff(freq)

        return ev

    c2 = consts.c[1]
    c3 = consts.c[2]

    def cone1(freq):
        return np.abs(freq[:, n]) < c2 * np.linalg.norm(freq[:, :n], axis=1)

    def cone2(freq):
        ns = np.linalg.norm(freq[:, :n], axis=1)
        return (np.abs(freq[:, n]) > consts.c[0] * ns) & (np.abs(freq[:, n]) < consts.c[3] * ns)

    def cone3(freq):
        return np.abs(freq[:, n]) > c3 * np.linalg.norm(freq[:, :n], axis=1)

    mu_d = g.mu
    pieces = {
        "A12": OperatorPiece(
            name="A12",
            symbol=Symbol(
                eval=cut(part2, chi1),
                declared_class=SymbolClass("symbol_valued", m=2.0, m2=mu, elliptic_dim=n),
                freq_dim=n + 1,
                spatial_dim=n,
                support_cone=cone1,
                name="A12",
            ),
            ledger_class=class_A12(mu_d),
            cutoff=chi1,
        ),
        "A11": OperatorPiece(
            name="A11",
            symbol=Symbol(
                eval=cut(part1, chi1),
                declared_class=SymbolClass("symbol_valued", m=1.0, m2=mu + 1.0, elliptic_dim=n),
                freq_dim=n + 1,
                spatial_dim=n,
                support_cone=cone1,
                name="A11",
            ),
            ledger_class=class_A11(mu_d),
            cutoff=chi1,
        ),
        "A2": OperatorPiece(
            name="A2",
            symbol=Symbol(
                eval=cut(full, chi2),
                declared_class=SymbolClass("hormander", m=mu + 2.0),
                freq_dim=n + 1,
                spatial_dim=n,
                support_cone=cone2,
                name="A2",
            ),
            ledger_class=class_A2(mu_d),
            cutoff=chi2,
        ),
        "A3mu": OperatorPiece(
            name="A3mu",
            symbol=Symbol(
                eval=cut(part2, chi3),
                declared_class=SymbolClass("symbol_valued", m=mu, m2=2.0, elliptic_dim=1, elliptic_last=True),
                freq_dim=n + 1,
                spatial_dim=n,
                support_cone=cone3,
                name="A3mu",
            ),
            ledger_class=class_A3mu(mu_d, n),
            cutoff=chi3,
        ),
        "A3mu1": OperatorPiece(
            name="A3mu1",
            symbol=Symbol(
                eval=cut(part1, chi3),
                declared_class=SymbolClass("symbol_valued", m=mu + 1.0, m2=1.0, elliptic_dim=1, elliptic_last=True),
                freq_dim=n + 1,
                spatial_dim=n,
                support_cone=cone3,
                name="A3mu1",
            ),
            ledger_class=class_A3mu1(mu_d, n),
            cutoff=chi3,
        ),
    }

    # Pointwise identity: the five cut amplitudes reassemble the amplitude.
    rng = np.random.default_rng(seed)
    freq = rng.normal(size=(n_check, n + 1)) * np.exp(rng.uniform(0, 5, size=(n_check, 1)))
    x0 = np.zeros(n)
    x0[0] = 0.2
    total = sum(p.symbol.eval(x0, freq) for p in pieces.values())
    ref = full(x0, freq)
    scale = np.maximum(np.abs(ref), 1.0)
    worst = float(np.max(np.abs(total - ref) / scale))
    if worst > check_tol:
        raise DecompositionError(f"cut amplitudes missed the total by {worst:.2e}")
    return pieces


def invert_principal(
    g: ConormalConductivity,
    K: int = 8,
    ratio_bound: float = 0.95,
    n_ratio_grid: int = 4096,
) -> OperatorPiece:
    """First inverse piece: reciprocal of the leading coefficient over -|sigma|**2.

    The coefficient reciprocal is the truncated geometric series of the
    one-sided perturbation ratio; the series only converges where that
    ratio stays below one, which is checked on a box grid and enforced with
    :class:`ConvergenceError`.
    """
    gamma, x, gamma0 = _gamma_difffn(g)
    zg = np.linspace(-g.box.L, g.box.L, n_ratio_grid)
    ratio = np.max(np.abs(x(zg, 0)))
    if ratio >= ratio_bound:
        raise ConvergenceError(f"perturbation ratio {ratio:.3f} >= {ratio_bound}; restrict the box")
    series = DiffFn.constant(0.0)
    minus_x_pow = DiffFn.constant(1.0)
    for _ in range(K + 1):
        series = series + minus_x_pow
        minus_x_pow = minus_x_pow * (x * (-1.0))
    q = gamma0.reciprocal() * series
    cone = ConeSymbol([SymbolTerm(q * (-1.0), -2)])
    mu = g.mu
    piece = OperatorPiece(
        name="B_1_1",
        symbol=cone.as_symbol("B_1_1", declared_order=-2.0),
        ledger_class=IplClass.pair(mu - Dyadic(3, 1), -mu - Dyadic(1, 1), CanonicalRelationTag.DELTA, CanonicalRelationTag.CSIGMA),
        cone=cone,
    )
    piece.symbol.meta["series_ratio"] = float(ratio)
    piece.symbol.meta["series_K"] = K
    return piece


def compose_principal(a: OperatorPiece, b: OperatorPiece) -> OperatorPiece:
    """Leading-term composition: pointwise product at matched frequency.

    The order class comes from the exact composition arithmetic; the
    sub-leading derivative content is published separately as error pieces
    by the recursion, not folded in here.
    """
    out_class = compose_antoniano(a.ledger_class, b.ledger_class)
    if a.cone is not None and b.cone is not None:
        cone = ConeSymbol(
            [
                SymbolTerm(ta.profile * tb.profile, ta.freq_order + tb.freq_order)
                for ta in a.cone.terms
                for tb in b.cone.terms
            ]
        )
        sym = cone.as_symbol(f"{a.name}*{b.name}", declared_order=float(cone.max_freq_order()))
        return OperatorPiece(name=f"{a.name}*{b.name}", symbol=sym, ledger_class=out_class, cone=cone)

    def ev(x, freq):
        return a.symbol.eval(x, freq) * b.symbol.eval(x, freq)

    sym = Symbol(
        eval=ev,
        declared_class=a.symbol.declared_class,
        freq_dim=a.symbol.freq_dim,
        spatial_dim=a.symbol.spatial_dim,
        support_cone=a.symbol.support_cone,
        name=f"{a.name}*{b.name}",
    )
    return OperatorPiece(name=f"{a.name}*{b.name}", symbol=sym, ledger_class=out_class)


def _cone_limited_multiplier(cone: ConeSymbol, z: np.ndarray, sigma: np.ndarray, ratio: float) -> np.ndarray:
    """Sum of terms profile_bl(z; sigma) * sigma**e with per-column bandlimit.

    For each frequency column the profile keeps only its own Fourier
    content with |tau| <= ratio * |sigma|.  Columns are filled in order of
    increasing threshold so each profile mode is added exactly once.
    """
    N = len(z)
    tau = 2.0 * np.pi * np.fft.fftfreq(N, d=(z[1] - z[0]))
    synth = np.exp(1j * np.outer(z, tau))
    inv = synth.conj().T / N
    cut = low_frequency_cutoff(sigma)
    safe = np.where(sigma == 0.0, 1.0, sigma)
    thresholds = ratio * np.abs(sigma)
    col_order = np.argsort(thresholds, kind="stable")
    tau_order = np.argsort(np.abs(tau), kind="stable")
    out = np.zeros((N, len(sigma)), dtype=complex)
    for term in cone.terms:
        coef = inv @ term.profile(z, 0).astype(complex)
        running = np.zeros(N, dtype=complex)
        ti = 0
        power = np.where(sigma == 0.0, 0.0, safe ** int(term.freq_order)) * cut
        for ci in col_order:
            T = thresholds[ci]
            while ti < N and np.abs(tau[tau_order[ti]]) <= T:
                t = tau_order[ti]
                running = running + coef[t] * synth[:, t]
                ti += 1
            out[:, ci] += running * power[ci]
    return out


@dataclass
class ParametrixBuild:
    """Result of the staged inversion: inverse pieces plus error bookkeeping."""

    stages: int
    substages: int
    series_K: int
    mu: Dyadic
    pieces: List[OperatorPiece]
    error_cones: Dict[Tuple[int, int, str], ConeSymbol]
    schedule: RecursionSchedule
    predicted_residual: IplClass
    cone_ratio: Optional[float] = None
    diagnostics: dict = field(default_factory=dict)

    def total_cone(self) -> ConeSymbol:
        terms = []
        for p in self.pieces:
            terms.extend(p.cone.terms)
        return ConeSymbol(terms)

    def multiplier(self, z_grid: np.ndarray, sigma_grid: np.ndarray, cone_ratio: Optional[float] = None) -> np.ndarray:
        """Realized position-dependent multiplier on a periodic grid.

        With ``cone_ratio`` (default: the stored support ratio) each term's
        spatial profile is bandlimited per frequency column to the cone
        |tau| <= ratio * |sigma|, matching the kernel support the inverse
        pieces are declared on; the raw pointwise profiles re-introduce
        interface singularities the cone excludes.
        """
        ratio = self.cone_ratio if cone_ratio is None else cone_ratio
        if ratio is None or not len(z_grid) or len(z_grid) & (len(z_grid) - 1):
            return self.total_cone().eval_grid(z_grid, sigma_grid)
        return _cone_limited_multiplier(self.total_cone(), z_grid, sigma_grid, ratio)

    def manifest(self, path=None, model: Optional[dict] = None) -> str:
        payload = {
            "stages": self.stages,
            "substages": self.substages,
            "series_K": self.series_K,
            "mu": str(self.mu),
            "pieces": [
                {
                    "name": p.name,
                    "class": repr(p.ledger_class),
                    "terms": len(p.cone.terms) if p.cone is not None else None,
                }
                for p in self.pieces
            ],
            "predicted_residual": repr(self.predicted_residual),
            "diagnostics": self.diagnostics,
        }
        if model:
            payload["model"] = model
        text = json.dumps(payload, indent=2)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text


def build_parametrix(
    g: ConormalConductivity,
    M: int = 2,
    N: int = 2,
    K: int = 8,
    consts: Optional[PartitionConstants] = None,
) -> ParametrixBuild:
    """Run the two-level inversion recursion.

    Substage rule: the next piece is built so the leading composition
    cancels the derivative error terms of the previous piece.  Stage rule:
    the accumulated principal mismatches (from the truncated coefficient
    reciprocal) open the next stage.  Every piece's order class is read off
    the exact schedule; the composition identity

        (coeff*Lap + grad-term) o (sum of pieces) - Id = sum of error pieces

    holds exactly for the tracked symbols, by construction.
    """
    if M < 1 or N < 1:
        raise ConvergenceError("need at least one stage and one substage")
    if M > 2 or N > 2:
        raise ConvergenceError("tracked-derivative budget supports at most two stages/substages")
    schedule = build_recursion_schedule(g.mu, M, N)
    gamma, x, gamma0 = _gamma_difffn(g)
    gamma_prime = _shift_derivative(gamma)

    b11 = invert_principal(g, K=K)
    q_times_minus = b11.cone.terms[0].profile  # -q
    neg_q = q_times_minus
    diagnostics = {"series_ratio": b11.symbol.meta["series_ratio"]}

    def solve_piece(target: ConeSymbol) -> ConeSymbol:
        # gamma * (-sigma**2) * piece ~ target  =>  piece = -q * target / sigma**2
        return target.times_profile(neg_q, freq_shift=-2)

    def error_pieces(beta: ConeSymbol, target: ConeSymbol):
        bz = beta.d_z()
        bzz = bz.d_z()
        e1 = beta.times_profile(gamma, scalar=-1.0, freq_shift=2) + (-target)
        e2 = bz.times_profile(gamma, scalar=2.0j, freq_shift=1) + bzz.times_profile(gamma)
        e3 = beta.times_profile(gamma_prime, scalar=1.0j, freq_shift=1) + bz.times_profile(gamma_prime)
        return e1, e2, e3

    pieces: List[OperatorPiece] = []
    error_cones: Dict[Tuple[int, int, str], ConeSymbol] = {}
    identity = ConeSymbol([SymbolTerm(DiffFn.constant(1.0), 0)])
    stage_target = identity
    for i in range(1, M + 1):
        e1_accum: Optional[ConeSymbol] = None
        target = stage_target
        for j in range(1, N + 1):
            beta = solve_piece(target)
            cls_ = schedule.entry(i, j, "B")
            piece = OperatorPiece(
                name=f"B_{i}_{j}",
                symbol=beta.as_symbol(f"B_{i}_{j}", declared_order=float(beta.max_freq_order())),
                ledger_class=cls_,
                cone=beta,
            )
            pieces.append(piece)
            e1, e2, e3 = error_pieces(beta, target)
            error_cones[(i, j, "E1")] = e1
            error_cones[(i, j, "E2")] = e2
            error_cones[(i, j, "E3")] = e3
            e1_accum = e1 if e1_accum is None else e1_accum + e1
            target = -(e2 + e3)
        stage_target = -e1_accum
    diagnostics["n_pieces"] = len(pieces)
    diagnostics["n_terms"] = sum(len(p.cone.terms) for p in pieces)
    if consts is None:
        consts = PartitionConstants.from_delta()
    return ParametrixBuild(
        stages=M,
        substages=N,
        series_K=K,
        mu=g.mu,
        pieces=pieces,
        error_cones=error_cones,
        schedule=schedule,
        predicted_residual=schedule.residual,
        cone_ratio=consts.c[1],
        diagnostics=diagnostics,
    )


@dataclass
class ResidualReport:
    modes: np.ndarray
    ratios: np.ndarray
    slope: float
    grid_size: int

    def to_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["k", "ratio"])
            for k, r in zip(self.modes, self.ratios):
                writer.writerow([int(k), r])


def _mode_frequencies(N: int, L: float) -> np.ndarray:
    return 2.0 * np.pi * np.fft.fftfreq(N, d=2.0 * L / N)


def apply_conductivity_operator(g: ConormalConductivity, u: np.ndarray, z: np.ndarray, L: float) -> np.ndarray:
    """div(gamma grad u) on the periodic grid, derivatives taken spectrally."""
    N = len(z)
    om = _mode_frequencies(N, L)
    phase = np.exp(1j * np.outer(z, om))
    inv_phase = phase.conj().T / N
    du = phase @ (1j * om * (inv_phase @ u))
    w = gamma_grid(g, z) * du
    return phase @ (1j * om * (inv_phase @ w))


def gamma_grid(g: ConormalConductivity, z: np.ndarray) -> np.ndarray:
    from .symbols import gamma_eval

    return gamma_eval(g, z[:, None])


def residual_test(
    g: ConormalConductivity,
    build: ParametrixBuild,
    modes: Sequence[int] = (8, 16, 32, 64),
    grid_size: int = 2048,
    window: Optional[Callable] = None,
) -> ResidualReport:
    """Measured smoothing of the inverse: |L (B f_k) - f_k| / |f_k| per mode.

    Test functions are windowed complex exponentials on the periodic box;
    the inverse acts as a position-dependent Fourier multiplier, the
    forward operator acts by exact multiplication and spectral derivatives.
    The report fits the decay of the ratio against the mode number.
    """
    L = g.box.L
    z = g.box.grid1d(grid_size)
    om = _mode_frequencies(grid_size, L)
    phase = np.exp(1j * np.outer(z, om))
    inv_phase = phase.conj().T / grid_size
    beta = build.multiplier(z, om)
    if window is None:
        from .partition import bump_window

        window = lambda zz: bump_window(zz, 0.45 * L, 0.8 * L)
    wvals = window(z)
    ratios = []
    for k in modes:
        f = wvals * np.exp(1j * (np.pi * k / L) * z)
        u = (phase * beta) @ (inv_phase @ f)
        r = apply_conductivity_operator(g, u, z, L) - f
        num = np.sqrt(np.mean(np.abs(r) ** 2))
        den = np.sqrt(np.mean(np.abs(f) ** 2))
        if not np.isfinite(num) or not np.isfinite(den) or den == 0.0:
            raise NumericsError("residual norms are not finite")
        ratios.append(num / den)
    ratios = np.asarray(ratios)
    slope, _ = fit_loglog_slope(np.asarray(modes, dtype=float), ratios)
    return ResidualReport(modes=np.asarray(modes), ratios=ratios, slope=slope, grid_size=grid_size)


def compose_with_B_classes(piece: OperatorPiece, build: ParametrixBuild) -> IplClass:
    """Order class of (cone-two or cone-three piece) composed with the inverse.

    Both flavors land in the same single-relation flowout class of order
    2 mu + 3/2; only pieces with the restricted supports compose this way.
    """
    b_class = build.pieces[0].ledger_class
    if piece.name not in ("A2", "A3mu", "A3mu1"):
        raise TagError(f"{piece.name} does not have the restricted-support composition rule")
    if piece.ledger_class.is_pair:
        if piece.ledger_class.relations != (CanonicalRelationTag.C0, CanonicalRelationTag.CSIGMA):
            raise TagError("paired operand must live on (C0, CSigma)")
    elif piece.ledger_class.relations[0] is not CanonicalRelationTag.CSIGMA:
        raise TagError("single operand must live on the flowout")
    p_single = IplClass.single(piece.ledger_class.p, CanonicalRelationTag.CSIGMA)
    b_single = IplClass.single(b_class.p, CanonicalRelationTag.CSIGMA)
    return compose_single(p_single, b_single)
