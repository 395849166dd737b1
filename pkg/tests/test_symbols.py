import numpy as np
import pytest

from greenfio.errors import PositivityError, WindowError
from greenfio.symbols import (
    Box,
    DiffFn,
    FlatInterface,
    Symbol,
    SymbolClass,
    SymbolWindow,
    check_symbol_estimate,
    gamma_eval,
    gamma_symbol,
    make_model,
    reconstruct_gamma,
)
from greenfio.util import fit_loglog_slope


@pytest.fixture(scope="module")
def window():
    return SymbolWindow()


@pytest.fixture(scope="module")
def unit_jump_model():
    # gamma = 1 + x_+^{1/2} (no taper, wide box)
    return make_model(L=3.0, jump_plus=1.0, jump_minus=0.0, edge_taper=False)


@pytest.fixture(scope="module")
def two_sided_model():
    return make_model(L=3.0, jump_plus=0.4, jump_minus=0.15, edge_taper=False)


class TestDiffFn:
    def test_product_rule_matches_fd(self):
        f = DiffFn.cosine(0.7, 2.3, 0.4, offset=1.1)
        g = DiffFn.one_sided_power(0.5, +1)
        prod = f * g
        z = np.array([0.3, 0.9, 1.7])
        h = 1e-5
        for order in (1, 2):
            fd = (prod(z + h, order - 1) - prod(z - h, order - 1)) / (2 * h)
            assert np.allclose(prod(z, order), fd, rtol=1e-7, atol=1e-6)

    def test_reciprocal(self):
        f = DiffFn.cosine(0.3, 1.7, 0.2, offset=2.0)
        r = f.reciprocal()
        z = np.linspace(-1, 1, 11)
        assert np.allclose(r(z, 0) * f(z, 0), 1.0, rtol=1e-14)
        h = 1e-5
        fd = (r(z + h, 0) - r(z - h, 0)) / (2 * h)
        assert np.allclose(r(z, 1), fd, rtol=1e-8, atol=1e-9)
        fd3 = (r(z + h, 2) - r(z - h, 2)) / (2 * h)
        assert np.allclose(r(z, 3), fd3, rtol=1e-6, atol=1e-6)

    def test_one_sided_power_vanishes_on_other_side(self):
        g = DiffFn.one_sided_power(0.5, +1)
        z = np.array([-2.0, -0.1, 0.0])
        for order in range(4):
            assert np.all(g(z, order) == 0.0)

    def test_smooth_window_plateau_and_support(self):
        w = DiffFn.smooth_window(0.5, 0.9)
        z = np.array([0.0, 0.3, 0.5])
        assert np.allclose(w(z, 0), 1.0)
        assert np.all(w(np.array([0.95, 2.0]), 0) == 0.0)
        zt = np.linspace(0.5, 0.9, 101)
        h = 1e-6
        fd = (w(zt + h, 0) - w(zt - h, 0)) / (2 * h)
        assert np.allclose(w(zt, 1), fd, rtol=1e-5, atol=1e-6)


class TestGammaEval:
    def test_value_at_quarter(self, unit_jump_model):
        # mu = -3/2, h = x, gamma0 = 1, jump 1: gamma(1/4) = 1 + sqrt(1/4)
        pt = np.array([[0.25]])
        assert gamma_eval(unit_jump_model, pt)[0] == pytest.approx(1.5, rel=1e-14)

    def test_continuity_across_interface(self, two_sided_model):
        ts = 10.0 ** -np.arange(2, 9)
        left = gamma_eval(two_sided_model, -ts[:, None])
        right = gamma_eval(two_sided_model, ts[:, None])
        center = gamma_eval(two_sided_model, np.array([[0.0]]))[0]
        assert np.abs(right - center).max() <= 0.41 * np.sqrt(ts[0])
        gap = np.abs(right - left)
        assert gap[-1] < gap[0]
        assert gap[-1] <= 1e-3

    def test_one_sided_hoelder_rate(self, two_sided_model):
        ts = 10.0 ** -np.arange(1, 8)
        vals = gamma_eval(two_sided_model, ts[:, None])
        center = gamma_eval(two_sided_model, np.array([[0.0]]))[0]
        ratio = np.abs(vals - center) / np.sqrt(ts)
        assert np.all(ratio <= 0.41)
        assert np.all(ratio >= 0.39)

    def test_smooth_case(self):
        g = make_model(jump_plus=0.0, jump_minus=0.0, gamma0_wiggle=0.1)
        x = np.linspace(-0.9, 0.9, 33)[:, None]
        expected = g.gamma0(x)
        assert np.allclose(gamma_eval(g, x), expected, rtol=1e-14)

    def test_positivity_guard(self):
        g = make_model(jump_plus=-30.0, jump_minus=0.0, edge_taper=False)
        with pytest.raises(PositivityError):
            gamma_eval(g, np.array([[0.81]]))


class TestGammaSymbol:
    def test_singular_decay_slope_unit_jump(self, unit_jump_model, window):
        sym = gamma_symbol(unit_jump_model, window)
        theta = np.geomspace(16.0, 256.0, 9)
        vals = np.abs(sym(np.zeros(1), theta[:, None]))
        slope, _ = fit_loglog_slope(theta, vals)
        assert -1.6 <= slope <= -1.4

    def test_singular_decay_slope_two_sided(self, two_sided_model, window):
        sym = gamma_symbol(two_sided_model, window)
        theta = np.geomspace(16.0, 256.0, 9)
        vals = np.abs(sym(np.zeros(1), theta[:, None]))
        slope, _ = fit_loglog_slope(theta, vals)
        assert -1.6 <= slope <= -1.4

    def test_smooth_gamma_rapid_decay(self, window):
        g = make_model(L=3.0, jump_plus=0.0, jump_minus=0.0)
        sym = gamma_symbol(g, window, check_reconstruction=False)
        theta = np.geomspace(16.0, 256.0, 9)
        vals = np.abs(sym(np.zeros(1), theta[:, None]))
        slope, _ = fit_loglog_slope(theta, np.maximum(vals, 1e-300))
        assert slope <= -10.0

    def test_reconstruction_quarter_point(self, unit_jump_model, window):
        target = gamma_eval(unit_jump_model, np.array([[0.25]]))[0]
        recon = reconstruct_gamma(unit_jump_model, window, np.zeros(1), 0.25)
        assert abs(recon - target) / target <= 1e-6

    def test_constructor_validates_reconstruction(self, two_sided_model, window):
        sym = gamma_symbol(two_sided_model, window)
        assert sym.meta["reconstruction_error"] <= 1e-6

    def test_window_must_fit_box(self, window):
        g = make_model(L=1.0)
        with pytest.raises(WindowError):
            gamma_symbol(g, window)

    def test_amplitude_class_certified(self, two_sided_model, window):
        sym = gamma_symbol(two_sided_model, window)
        report = check_symbol_estimate(sym, max_order=2, r_max=256.0, include_spatial=False)
        assert report.passed


def bracket(x):
    return np.sqrt(1.0 + np.sum(np.atleast_2d(x) ** 2, axis=-1))


class TestCheckSymbolEstimate:
    def test_defining_example_passes(self):
        mu = -1.5
        sym = Symbol(
            eval=lambda x, f: bracket(f) ** mu + 0j,
            declared_class=SymbolClass("hormander", m=mu),
            freq_dim=1,
            name="bracket_power",
        )
        report = check_symbol_estimate(sym, max_order=2)
        assert report.passed

    def test_two_block_example_passes(self):
        # <sigma>^2 <tau>^mu restricted to |tau| < c2 |sigma|, sigma elliptic
        mu, c2 = -1.5, 0.4364

        def ev(x, f):
            sig = f[:, :1]
            tau = f[:, 1]
            return (bracket(sig) ** 2) * (np.sqrt(1 + tau**2) ** mu) + 0j

        sym = Symbol(
            eval=ev,
            declared_class=SymbolClass("symbol_valued", m=2.0, m2=mu, elliptic_dim=1),
            freq_dim=2,
            support_cone=lambda f: np.abs(f[:, 1]) < c2 * np.abs(f[:, 0]),
            name="elliptic_times_conormal",
        )
        report = check_symbol_estimate(sym, max_order=2)
        assert report.passed

    def test_log_growth_fails(self):
        mu = -1.5

        def ev(x, f):
            b = bracket(f)
            return b**mu * np.log(b) + 0j

        sym = Symbol(
            eval=ev,
            declared_class=SymbolClass("hormander", m=mu),
            freq_dim=1,
            name="log_violator",
        )
        report = check_symbol_estimate(sym, max_order=2)
        assert not report.passed

    def test_report_json_schema(self, tmp_path):
        sym = Symbol(
            eval=lambda x, f: bracket(f) ** -2.0 + 0j,
            declared_class=SymbolClass("hormander", m=-2.0),
            freq_dim=2,
            name="simple",
        )
        report = check_symbol_estimate(sym, max_order=1)
        import json

        path = tmp_path / "report.json"
        report.to_json(path)
        data = json.loads(path.read_text())
        assert data["pass"] is True
        assert {"alpha", "beta", "gamma", "max_ratio"} <= set(data["per_multiindex"][0])
