import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cvtec.analysis import (
    RATE_HEADER,
    SWEEP_HEADER,
    analytic_p1,
    analytic_p2,
    analytic_p3,
    brute_force_rate,
    db_grid,
    monte_carlo_rate,
    monte_carlo_summary,
    rate_sweep,
    squeezing_sweep,
    weight_class_accounting,
    write_rate_csv,
    write_sweep_csv,
)
from cvtec.decoder import build_decoder
from cvtec.tec import ClusterConfig

P_GRID = (0.01, 0.05, 0.1, 0.2, 0.3, 0.5)
unit = st.floats(0.0, 1.0)


@pytest.fixture(scope="module")
def table():
    return build_decoder()


def p2_by_counting(p):
    # failures: 6 of 15 weight-2 and weight-4 classes, all 20 weight-3 patterns
    q = 1 - p
    return 6 * p**2 * q**4 + 6 * p**4 * q**2 + 20 * p**3 * q**3


class TestFormulas:
    def test_p1(self):
        assert analytic_p1(0) == 0
        assert analytic_p1(0.5) == 0.5
        assert analytic_p1(0.1) == pytest.approx(0.18, abs=1e-15)

    def test_p2(self):
        assert analytic_p2(0) == 0
        assert analytic_p2(1) == pytest.approx(0, abs=1e-15)
        assert analytic_p2(0.1) == pytest.approx(0.054432, abs=1e-12)

    def test_p3(self):
        assert analytic_p3(0.1) == pytest.approx(analytic_p2(0.1) - 18 * 0.001 * 0.729, abs=1e-15)
        assert analytic_p3(0.1) == pytest.approx(0.04131, abs=1e-12)

    @pytest.mark.parametrize("f", [analytic_p1, analytic_p2, analytic_p3])
    @pytest.mark.parametrize("p", [-0.01, 1.01])
    def test_range(self, f, p):
        with pytest.raises(ValueError):
            f(p)

    @given(unit)
    def test_p2_matches_counting(self, p):
        assert analytic_p2(p) == pytest.approx(p2_by_counting(p), abs=1e-12)

    @given(unit)
    def test_p3_below_p2(self, p):
        assert analytic_p3(p) <= analytic_p2(p) + 1e-15

    @given(unit)
    def test_p3_symmetric(self, p):
        assert analytic_p3(p) == pytest.approx(analytic_p3(1 - p), abs=1e-12)


class TestBruteForce:
    @pytest.mark.parametrize("p", P_GRID)
    def test_sign_sensitive(self, table, p):
        assert abs(brute_force_rate(table, p) - analytic_p3(p)) < 1e-12

    @pytest.mark.parametrize("p", P_GRID)
    def test_sign_blind(self, table, p):
        assert abs(brute_force_rate(table, p, sign_sensitive=False) - analytic_p2(p)) < 1e-12

    def test_zero(self, table):
        assert brute_force_rate(table, 0.0) == 0.0

    def test_accounting(self, table):
        assert weight_class_accounting(table) == {
            0: (1, 1), 1: (6, 6), 2: (9, 15), 3: (18, 20), 4: (9, 15), 5: (6, 6), 6: (1, 1)
        }

    def test_accounting_sign_blind(self):
        acc = weight_class_accounting(build_decoder(sign_sensitive=False))
        assert acc[3] == (0, 20)
        assert acc[2] == acc[4] == (9, 15)


class TestMonteCarlo:
    def test_p_zero(self):
        res = monte_carlo_rate(ClusterConfig(), 0.0, 10_000, seed=1)
        assert res.estimate == 0 and res.errors == 0

    def test_sign_sensitive_p01(self, table):
        res = monte_carlo_rate(ClusterConfig(), 0.1, 1_000_000, seed=42, table=table)
        assert abs(res.estimate - analytic_p3(0.1)) < 3 * res.std_error
        assert res.errors == 41436  # frozen for seed 42, 16 shards

    def test_sign_blind_p03(self):
        res = monte_carlo_rate(ClusterConfig(), 0.3, 1_000_000, seed=7, sign_sensitive=False)
        assert abs(res.estimate - analytic_p2(0.3)) < 3 * res.std_error

    def test_reproducible_and_worker_independent(self, table):
        a = monte_carlo_rate(ClusterConfig(), 0.2, 50_000, seed=3, table=table)
        b = monte_carlo_rate(ClusterConfig(), 0.2, 50_000, seed=3, table=table, workers=4)
        assert a == b

    def test_seed_matters(self, table):
        a = monte_carlo_rate(ClusterConfig(), 0.2, 50_000, seed=3, table=table)
        b = monte_carlo_rate(ClusterConfig(), 0.2, 50_000, seed=4, table=table)
        assert a.errors != b.errors

    def test_sampled_high_squeezing_matches_ideal(self, table):
        res = monte_carlo_rate(ClusterConfig(r=4.0), 0.1, 200_000, seed=5, mode="sampled", table=table)
        assert abs(res.estimate - analytic_p3(0.1)) < 4 * res.std_error

    def test_sampled_low_squeezing_is_worse(self, table):
        res = monte_carlo_rate(ClusterConfig(r=0.0), 0.1, 50_000, seed=5, mode="sampled", epsilon=0.5, table=table)
        assert res.estimate > analytic_p3(0.1) + 5 * res.std_error

    @pytest.mark.parametrize("kwargs", [dict(trials=0), dict(p=1.5), dict(mode="psychic")])
    def test_invalid(self, kwargs):
        args = dict(cfg=ClusterConfig(), p=0.1, trials=10, seed=0) | kwargs
        with pytest.raises(ValueError):
            monte_carlo_rate(**args)

    def test_summary(self):
        s = monte_carlo_summary(ClusterConfig(), 0.1, 10_000, 1)
        assert s["analytic"] == pytest.approx(analytic_p3(0.1))
        assert s["metadata"]["seed"] == 1 and s["metadata"]["shards"] == 16
        assert "timestamp" not in s and "timestamp" not in s["metadata"]

    def test_summary_zero_error(self):
        s = monte_carlo_summary(ClusterConfig(), 0.0, 100, 1)
        assert s["estimate"] == 0 and s["z_score"] == 0.0

    def test_summary_other_pair_has_no_closed_form(self):
        s = monte_carlo_summary(ClusterConfig(protected=(2, 5)), 0.1, 1000, 1)
        assert s["analytic"] is None and s["z_score"] is None


class TestRateSweep:
    def test_default_grid(self):
        pts = rate_sweep()
        assert len(pts) == 101 and pts[0].p == 0 and pts[-1].p == 0.5

    def test_ordering(self):
        for pt in rate_sweep():
            assert pt.p3 <= pt.p2 <= pt.p1
            if 0 < pt.p < 1:
                assert pt.p3 < pt.p2

    def test_endpoints(self):
        lo, hi = rate_sweep([0.0, 1.0])
        assert lo.p2 == lo.p3 == 0
        assert hi.p2 == pytest.approx(0, abs=1e-15) and hi.p3 == pytest.approx(0, abs=1e-15)
        assert rate_sweep([0.5])[0].p1 == 0.5

    def test_csv(self):
        buf = io.StringIO()
        write_rate_csv(rate_sweep([0.0, 0.25]), buf)
        lines = buf.getvalue().split("\n")
        assert lines[0] == ",".join(RATE_HEADER)
        assert lines[2] == "0.25,0.375,0.263671875,0.14501953125"


@pytest.fixture(scope="module")
def points():
    return squeezing_sweep(db_grid(15.0, 0.5))


class TestSqueezingSweep:
    def test_curves(self, points):
        for pt in points:
            c = 0.25 * 10 ** (-pt.squeezing_db / 10) * 2
            assert pt.var_snl == pytest.approx(0.5, abs=1e-12)
            assert pt.var_no_error == pytest.approx(c, abs=1e-9)
            assert pt.var_uncorrected == pytest.approx(c + 0.315, abs=1e-9)
            assert pt.var_corrected == pytest.approx(pt.var_no_error, abs=1e-12)

    def test_zero_db(self, points):
        assert points[0].var_no_error == pytest.approx(points[0].var_snl, abs=1e-12)

    def test_large_squeezing_limit(self):
        (pt,) = squeezing_sweep([80.0])
        assert pt.var_no_error < 1e-8
        assert pt.var_uncorrected == pytest.approx(0.315, abs=1e-8)

    def test_error_variance_one_db(self):
        assert 0.25 * 10**0.1 == pytest.approx(0.315, abs=5e-4)

    def test_mode6_error(self):
        for pt in squeezing_sweep([0.0, 3.0], error_mode=6):
            assert pt.var_corrected == pytest.approx(pt.var_no_error, abs=1e-12)

    def test_invalid(self):
        with pytest.raises(ValueError):
            squeezing_sweep([1.0], error_variance=0.0)
        with pytest.raises(ValueError):
            squeezing_sweep([-1.0])

    def test_grid(self):
        assert list(db_grid(0.0)) == [0.0]
        assert len(db_grid(10.0, 0.1)) == 101
        np.testing.assert_allclose(db_grid(1.0, 0.25), [0, 0.25, 0.5, 0.75, 1.0])

    def test_csv(self, points):
        buf = io.StringIO()
        write_sweep_csv(points[:2], buf)
        lines = buf.getvalue().split("\n")
        assert lines[0] == ",".join(SWEEP_HEADER)
        assert lines[1] == "0.0,0.5,0.5,0.815,0.5"
        assert len(lines) == 4 and lines[-1] == ""
