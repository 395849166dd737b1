import numpy as np
import pytest
from scipy.integrate import quad

from greenfio.convest import (
    GAMMA_FLAT,
    GAMMA_SPIKE,
    ConvPoint,
    ModelSymbol,
    a3_convolve,
    classify_region,
    conv_point_grid,
    flat_bound,
    interval_split_values,
    spike_bound,
    verify_derivative_gain,
    verify_interval_estimates,
    verify_lemma_bound,
)
from greenfio.errors import DomainError, QuadratureError


class TestA3:
    def test_closed_form_origin(self):
        a = ModelSymbol(-2.0)
        pt = ConvPoint(sigma=[0.0], sigma_tilde=[0.0], rho_tilde=0.0)
        val = a3_convolve(a, a, pt)
        assert abs(val - np.pi / 2.0) <= 1e-6

    def test_zero_factor(self):
        class Zero:
            order = -2.0

            def __call__(self, sigma, rho):
                return np.zeros(np.broadcast(np.sum(np.asarray(sigma), axis=-1), np.asarray(rho)).shape)

        pt = ConvPoint(sigma=[1.0], sigma_tilde=[2.0], rho_tilde=3.0)
        assert a3_convolve(Zero(), ModelSymbol(-2.0), pt) == 0.0

    def test_swap_symmetry(self):
        a1 = ModelSymbol(-1.5)
        a2 = ModelSymbol(-2.0)
        pt = ConvPoint(sigma=[3.0], sigma_tilde=[-1.5], rho_tilde=7.0)
        lhs = a3_convolve(a1, a2, pt)
        swapped = ConvPoint(sigma=pt.sigma_tilde, sigma_tilde=pt.sigma, rho_tilde=-pt.rho_tilde)
        rhs = a3_convolve(a2, a1, swapped)
        assert lhs == pytest.approx(rhs, rel=1e-9)

    def test_split_matches_adaptive(self):
        a1 = ModelSymbol(-1.5)
        a2 = ModelSymbol(-1.5)
        for pt in [
            ConvPoint(sigma=[2.0], sigma_tilde=[-1.0], rho_tilde=5.0),
            ConvPoint(sigma=[11.0], sigma_tilde=[4.0], rho_tilde=-2.0),
            ConvPoint(sigma=[0.3], sigma_tilde=[0.2], rho_tilde=0.0),
        ]:
            val = a3_convolve(a1, a2, pt)
            s2 = float(pt.sigma[0]) ** 2
            st2 = float(pt.sigma_tilde[0]) ** 2
            ref, _ = quad(
                lambda r: (1 + s2 + r * r) ** -0.75 * (1 + st2 + (pt.rho_tilde - r) ** 2) ** -0.75,
                -np.inf,
                np.inf,
                limit=400,
            )
            assert val == pytest.approx(ref, rel=1e-8, abs=1e-12)

    def test_rejects_non_integrable_orders(self):
        pt = ConvPoint(sigma=[1.0], sigma_tilde=[1.0], rho_tilde=1.0)
        with pytest.raises(DomainError):
            a3_convolve(ModelSymbol(-0.5), ModelSymbol(-2.0), pt)

    def test_refinement_guard(self):
        pt = ConvPoint(sigma=[2.0], sigma_tilde=[1.0], rho_tilde=4.0)
        with pytest.raises(QuadratureError):
            a3_convolve(ModelSymbol(-1.5), ModelSymbol(-1.5), pt, nodes_finite=2, refine_tol=1e-16)

    def test_n2_points(self):
        a1 = ModelSymbol(-1.5)
        pt = ConvPoint(sigma=[2.0, 1.0], sigma_tilde=[0.5, -0.5], rho_tilde=3.0)
        val = a3_convolve(a1, a1, pt)
        assert np.isfinite(val) and val > 0


class TestRegions:
    def test_classification_matches_definitions(self):
        assert classify_region(1.0, 2.0, 5.0) == "I"
        assert classify_region(2.0, 3.0, 1.0) == "II"
        assert classify_region(3.0, 2.0, 1.0) == "III"
        assert classify_region(1.0, 5.0, 2.0) == "IV"
        assert classify_region(5.0, 1.0, 2.0) == "V"

    def test_gamma_split(self):
        assert ConvPoint(sigma=[1.0], sigma_tilde=[1.0], rho_tilde=9.0).gamma == GAMMA_SPIKE
        assert ConvPoint(sigma=[9.0], sigma_tilde=[1.0], rho_tilde=1.0).gamma == GAMMA_FLAT

    def test_grid_covers_all_regions(self):
        pts = conv_point_grid(n=1, r_max=64.0, per_region=4, seed=1)
        seen = {p.region for p in pts}
        assert seen == {"I", "II", "III", "IV", "V"}

    def test_grid_labels_consistent(self):
        for p in conv_point_grid(n=2, r_max=32.0, per_region=3, seed=2):
            ns = np.linalg.norm(p.sigma)
            nst = np.linalg.norm(p.sigma_tilde)
            nrt = abs(p.rho_tilde)
            r = p.region
            if r == "I":
                assert ns <= nrt and nst <= nrt
            elif r == "II":
                assert nrt <= ns <= nst
            elif r == "III":
                assert nrt <= nst <= ns
            elif r == "IV":
                assert ns <= nrt <= nst
            else:
                assert nst <= nrt <= ns


class TestBounds:
    def test_lemma_bound_envelope(self):
        rep = verify_lemma_bound(ModelSymbol(-1.5), ModelSymbol(-1.5), n=1, r_max=128.0)
        assert rep.passed
        labels = set(rep.per_region)
        assert f"{GAMMA_SPIKE}/I" in labels
        assert all(v["growth"] <= 0.10 for v in rep.per_region.values())

    def test_lemma_bound_perturbed_symbols(self):
        rep = verify_lemma_bound(
            ModelSymbol(-1.5, perturbed=True), ModelSymbol(-1.5, perturbed=True), n=1, r_max=64.0
        )
        assert rep.passed

    def test_boundary_point_bounds_comparable(self):
        # at |sigma| = |sigma_t| = |rho_t| the two envelopes agree up to constants
        M = Mt = -1.5
        for r in (2.0, 16.0, 128.0):
            b1 = spike_bound(M, Mt, r, r, r)
            b2 = flat_bound(M, Mt, r, r, r)
            assert 1.0 / 4.0 <= b1 / b2 <= 4.0

    def test_origin_bound_covers_closed_form(self):
        assert spike_bound(-2.0, -2.0, 0.0, 0.0, 0.0) >= np.pi / 2.0

    def test_report_json(self, tmp_path):
        rep = verify_lemma_bound(ModelSymbol(-1.5), ModelSymbol(-1.5), n=1, r_max=32.0)
        import json

        path = tmp_path / "bounds.json"
        rep.to_json(path)
        data = json.loads(path.read_text())
        assert data["pass"] is True
        any_region = next(iter(data["regions"].values()))
        assert {"sup_ratio", "fitted_constant", "pass"} <= set(any_region)


class TestIntervalEstimates:
    def test_all_twenty_hold(self):
        rep = verify_interval_estimates(ModelSymbol(-1.5), ModelSymbol(-1.5), n=1, r_max=64.0)
        assert rep.passed
        assert len(rep.per_region) == 20

    def test_split_values_sum_to_total(self):
        a = ModelSymbol(-2.0)
        pt = ConvPoint(sigma=[1.0], sigma_tilde=[0.5], rho_tilde=4.0)
        splits = interval_split_values(a, a, pt)
        total = sum(splits.values())
        direct = a3_convolve(a, a, pt)
        # non-negative integrand: split sum equals the plain value
        assert total == pytest.approx(direct, rel=1e-9)


class TestDerivativeGains:
    @pytest.mark.parametrize("direction", ["sigma", "sigma_tilde", "rho_tilde"])
    def test_gain_bounded(self, direction):
        rep = verify_derivative_gain(
            ModelSymbol(-1.5), ModelSymbol(-1.5), direction, n=1, r_max=64.0
        )
        assert rep.passed

    def test_zero_symbol_zero_derivative(self):
        class Zero:
            order = -2.0

            def __call__(self, sigma, rho):
                sigma = np.asarray(sigma, dtype=float)
                rho = np.asarray(rho, dtype=float)
                return np.zeros(np.broadcast(np.sum(sigma, axis=-1), rho).shape)

        pts = conv_point_grid(n=1, r_max=16.0, per_region=2, n_radii=3, seed=5)
        rep = verify_derivative_gain(Zero(), ModelSymbol(-2.0), "sigma", points=pts, r_max=16.0)
        assert rep.passed
        assert all(v["sup_ratio"] == 0.0 for v in rep.per_region.values() if "sup_ratio" in v)

    def test_bad_direction(self):
        with pytest.raises(DomainError):
            verify_derivative_gain(ModelSymbol(-1.5), ModelSymbol(-1.5), "bogus")
