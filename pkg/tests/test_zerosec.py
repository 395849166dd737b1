import numpy as np
import pytest

from greenfio.convest import ModelSymbol, a3_batch
from greenfio.errors import InvalidPointError
from greenfio.ledger import Dyadic
from greenfio.oscint import KernelGrid
from greenfio.partition import PartitionConstants
from greenfio.symbols import CurvedInterface, FlatInterface, Symbol, SymbolClass, check_symbol_estimate
from greenfio.zerosec import (
    Bad2Report,
    adjoint_amplitude,
    check_bad2_smoothness,
    classify_zero_section,
    compose_zero_section,
    flowout_chain_bound,
    iterated_regularity_diagnostic,
)

D = Dyadic.from_any


@pytest.fixture(scope="module")
def consts():
    return PartitionConstants.from_delta()


class TestClassify:
    def test_left(self):
        case = classify_zero_section([0.5], [0.0], 1.0, FlatInterface(1))
        assert case.side == "left"

    def test_right_collinear(self):
        h = CurvedInterface(0.7)
        x = np.array([0.2, 0.4])
        t = 1.7
        xi = t * h.gradient(x[None, :])[0]
        assert classify_zero_section(x, xi, t, h).side == "right"

    def test_none_on_dominant_cone(self, consts):
        c2 = consts.c[1]
        h = FlatInterface(1)
        xi = np.array([5.0])
        t = 0.9 * c2 * 5.0
        case = classify_zero_section([0.1], xi, t, h)
        assert case.side == "none"
        eta = xi - t * h.gradient(np.array([[0.1]]))[0]
        assert np.linalg.norm(eta) > (1 - c2) * np.linalg.norm(xi) > 0

    def test_zero_covector_rejected(self):
        with pytest.raises(InvalidPointError):
            classify_zero_section([0.0], [0.0], 0.0, FlatInterface(1))

    def test_mutual_exclusivity_scan(self, consts):
        rng = np.random.default_rng(77)
        h = CurvedInterface(0.4)
        m = 100_000
        x = rng.uniform(-1, 1, size=(m, 2))
        t = rng.normal(size=m) * np.exp(rng.uniform(0, 4, size=m))
        xi = rng.normal(size=(m, 2)) * np.exp(rng.uniform(0, 4, size=(m, 1)))
        # seed exact degenerate cases of both kinds
        xi[: m // 10] = 0.0
        xi[m // 10 : m // 5] = t[m // 10 : m // 5, None] * h.gradient(x[m // 10 : m // 5])
        tol = 1e-12
        norm_xi = np.linalg.norm(xi, axis=1)
        eta = xi - t[:, None] * h.gradient(x)
        norm_eta = np.linalg.norm(eta, axis=1)
        scale = norm_xi + np.abs(t)
        left = (norm_xi <= tol * np.abs(t)) & (np.abs(t) > 0)
        right = (norm_eta <= tol * scale) & (np.abs(t) > 0) & (norm_xi > tol * np.abs(t))
        assert np.count_nonzero(left & right) == 0
        assert np.count_nonzero(left) > 0 and np.count_nonzero(right) > 0

    def test_chain_bound(self, consts):
        c2 = consts.c[1]
        rng = np.random.default_rng(78)
        h = FlatInterface(2)
        violations = 0
        for _ in range(2000):
            xi = rng.normal(size=2) * np.exp(rng.uniform(0, 3))
            t1 = rng.uniform(-0.99, 0.99) * c2 * np.linalg.norm(xi)
            eta1 = xi - t1 * np.array([1.0, 0.0])
            t2 = rng.uniform(-0.99, 0.99) * c2 * np.linalg.norm(eta1)
            final, lower = flowout_chain_bound([0.3, -0.2], xi, [t1, t2], h, c2)
            if not final > lower > 0:
                violations += 1
        assert violations == 0


class TestAdjoint:
    def _symbol(self, fn, spatial_dim=2):
        return Symbol(
            eval=fn,
            declared_class=SymbolClass("hormander", m=-2.0),
            freq_dim=2,
            spatial_dim=spatial_dim,
            name="toy",
        )

    def test_real_symmetric_swaps_only(self):
        def fn(x_cat, freq):
            return (x_cat[0] + 2.0 * x_cat[1]) * np.sum(freq, axis=1)

        a = self._symbol(fn)
        adj = adjoint_amplitude(a)
        x_cat = np.array([0.3, -0.7])
        freq = np.array([[1.0, 2.0], [0.5, -1.0]])
        swapped = np.array([-0.7, 0.3])
        assert np.allclose(adj.eval(x_cat, freq), fn(swapped, freq))

    def test_involution(self):
        def fn(x_cat, freq):
            return (x_cat[0] - 1j * x_cat[1]) * freq[:, 0]

        a = self._symbol(fn)
        double = adjoint_amplitude(adjoint_amplitude(a))
        x_cat = np.array([0.2, 0.9])
        freq = np.array([[1.5, -0.5]])
        assert np.allclose(double.eval(x_cat, freq), a.eval(x_cat, freq))
        assert double.meta["h_leg_sign"] == 1

    def test_imaginary_constant_conjugated(self):
        a = self._symbol(lambda x_cat, freq: np.full(len(freq), 3.0j))
        adj = adjoint_amplitude(a)
        assert np.allclose(adj.eval(np.zeros(2), np.zeros((1, 2))), -3.0j)
        assert adj.meta["h_leg_sign"] == -1


class TestCompose:
    def test_orders_symmetric_case(self):
        res = compose_zero_section(ModelSymbol(-1.5), ModelSymbol(-1.5), n=1, h=FlatInterface(1))
        assert res.p == D("-3/2")
        assert res.good_class.l == D(0) and res.bad_class.l == D(0)

    def test_orders_asymmetric_case(self):
        res = compose_zero_section(ModelSymbol(-1.5), ModelSymbol(-2.5), n=2, h=FlatInterface(2))
        assert res.p == D("-5/2")
        assert res.good_class.l == D("-1/2")
        assert res.bad_class.l == D("1/2")

    def test_good_branch_uses_shifted_block(self, consts):
        h = FlatInterface(1)
        a = ModelSymbol(-1.5)
        res = compose_zero_section(a, a, n=1, h=h, consts=consts)
        x_cat = np.array([0.1, -0.2])
        freq = np.array([[20.0, -3.0]])  # (sigma, rho): shifted block fully elliptic
        got = res.good_amplitude.eval(x_cat, freq)
        sigma_t = 20.0 - (-3.0) * 1.0
        ref = a3_batch(a, a, np.array([[20.0]]), np.array([[sigma_t]]), np.array([-3.0]))[0]
        assert got[0] == pytest.approx(ref, rel=1e-12)

    def test_bad_branch_critical_point(self, consts):
        h = FlatInterface(1)
        a = ModelSymbol(-1.5)
        res = compose_zero_section(a, a, n=1, h=h, consts=consts)
        x_cat = np.array([0.1, -0.2])
        freq = np.array([[4.0, 40.0]])  # (sigma_t, rho): collinear-degenerate region
        got = res.bad_amplitude.eval(x_cat, freq)
        sigma = 4.0 + 40.0
        ref = a3_batch(a, a, np.array([[sigma]]), np.array([[4.0]]), np.array([40.0]))[0]
        # cutoffs multiply the convolution value
        assert abs(got[0]) <= abs(ref) + 1e-12

    def test_good_branch_class_certified(self):
        res = compose_zero_section(ModelSymbol(-1.5), ModelSymbol(-1.5), n=1, h=FlatInterface(1))
        rep = check_symbol_estimate(
            res.good_amplitude,
            max_order=2,
            r_max=64.0,
            x_points=[np.array([0.08, -0.05])],
            include_spatial=False,
            n_dirs=8,
        )
        assert rep.passed

    def test_eps_recorded_positive(self, consts):
        res = compose_zero_section(ModelSymbol(-1.5), ModelSymbol(-1.5), n=1, h=FlatInterface(1), consts=consts)
        assert res.eps_lower_bound == pytest.approx(1.0 - 2.0 * consts.c[1])
        assert res.eps_lower_bound > 0


class TestBad2:
    def test_value_and_derivative_convergence(self):
        rep = check_bad2_smoothness(
            ModelSymbol(-1.5), ModelSymbol(-1.5), n=1, D=2, R_ladder=(16.0, 32.0, 64.0, 128.0)
        )
        assert rep.passed
        for ratios in rep.shrink.values():
            assert np.all(ratios >= 2.0)

    def test_zero_amplitude_trivial(self):
        class Zero:
            order = -2.0

            def __call__(self, sigma, rho):
                sigma = np.asarray(sigma, dtype=float)
                rho = np.asarray(rho, dtype=float)
                return np.zeros(np.broadcast(np.sum(sigma, axis=-1), rho).shape)

        rep = check_bad2_smoothness(Zero(), ModelSymbol(-2.0), n=1, D=0, R_ladder=(16.0, 32.0, 64.0))
        assert np.allclose(np.abs(rep.values["d0"]), 0.0)

    def test_json_report(self, tmp_path):
        rep = check_bad2_smoothness(ModelSymbol(-1.5), ModelSymbol(-1.5), n=1, D=0, R_ladder=(16.0, 32.0, 64.0))
        import json

        path = tmp_path / "bad2.json"
        rep.to_json(path)
        data = json.loads(path.read_text())
        assert "per_derivative" in data and "integration_by_parts_count" in data
        assert data["integration_by_parts_count"] == 0 + 1 + 2


class TestIteratedRegularity:
    def test_diagnostic_on_synthesized_kernel(self):
        N = 128
        L = 2.0
        axis = -L / 2 + L * np.arange(N) / N
        # oscillatory kernel concentrated where both generator factors
        # vanish (near the diagonal and near the interface)
        vals = (
            np.exp(-24.0 * axis[:, None] ** 2)
            * np.exp(-24.0 * (axis[:, None] - axis[None, :]) ** 2)
            * np.exp(40j * (axis[:, None] - axis[None, :]))
        )
        K = KernelGrid(x_axis=axis, y_axis=axis.copy(), values=vals, box_length=L, R=0.0)
        report = iterated_regularity_diagnostic(K, FlatInterface(1), s=0.5)
        assert report["pass"]
        assert set(report["families"]) == {"interface", "leg_difference"}
