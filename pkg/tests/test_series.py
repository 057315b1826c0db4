import datetime as dt

import numpy as np
import pytest

from freightcast.errors import DomainError, LengthError, RangeError
from freightcast.series import (DifferenceSpec, Frequency, Month, TimeSeries,
                                Transform, apply_transform, difference,
                                forward_transform, integrate_values,
                                inverse_difference, inverse_transform,
                                log_jacobian, resample_weekly_to_monthly,
                                slice_window, week_month)

from oracles import monthly_means


class TestMonth:
    def test_arithmetic(self):
        m = Month(2019, 11)
        assert m + 2 == Month(2020, 1)
        assert Month(2020, 1) - m == 2
        assert m - 11 == Month(2018, 12)
        assert str(Month(2020, 4)) == "2020-04"

    def test_parse(self):
        assert Month.parse("2020-04") == Month(2020, 4)
        assert Month.parse("2020-04-30") == Month(2020, 4)
        with pytest.raises(ValueError):
            Month.parse("2020-13")
        with pytest.raises(ValueError):
            Month.parse("April 2020")

    def test_ordering(self):
        assert Month(2019, 12) < Month(2020, 1)


class TestTimeSeries:
    def test_basic(self):
        s = TimeSeries("2020-01", [1, 2, 3])
        assert s.start == Month(2020, 1)
        assert s.end == Month(2020, 3)
        assert s.index_of("2020-02") == 1
        assert [str(p) for p in s.periods()] == ["2020-01", "2020-02", "2020-03"]

    def test_immutable(self):
        s = TimeSeries("2020-01", [1.0, 2.0])
        with pytest.raises(ValueError):
            s.values[0] = 5.0

    def test_rejects_nonfinite(self):
        with pytest.raises(DomainError):
            TimeSeries("2020-01", [1.0, np.nan])

    def test_rejects_empty(self):
        with pytest.raises(LengthError):
            TimeSeries("2020-01", [])

    def test_index_out_of_range(self):
        s = TimeSeries("2020-01", [1, 2, 3])
        with pytest.raises(RangeError):
            s.index_of("2020-04")

    def test_weekly_index(self):
        s = TimeSeries(dt.date(2020, 1, 4), np.arange(5.0), Frequency.WEEKLY)
        assert s.end == dt.date(2020, 2, 1)
        assert s.index_of("2020-01-18") == 2
        with pytest.raises(RangeError):
            s.index_of("2020-01-19")

    def test_slice_window(self):
        s = TimeSeries("2019-01", np.arange(24.0))
        w = slice_window(s, "2019-06", "2019-08")
        assert w.start == Month(2019, 6)
        np.testing.assert_array_equal(w.values, [5, 6, 7])
        with pytest.raises(RangeError):
            slice_window(s, "2018-12", "2019-02")
        with pytest.raises(RangeError):
            slice_window(s, "2019-05", "2019-02")


class TestTransforms:
    def test_log_domain(self):
        with pytest.raises(DomainError):
            forward_transform([1.0, 0.0], "log")

    def test_sqrt_domain(self):
        with pytest.raises(DomainError):
            forward_transform([1.0, -1.0], Transform.SQRT)

    @pytest.mark.parametrize("t", list(Transform))
    def test_round_trip(self, t):
        x = np.array([0.5, 1.0, 7.25, 1e4])
        np.testing.assert_allclose(inverse_transform(forward_transform(x, t), t), x,
                                   rtol=1e-14)

    def test_sqrt_inverse_is_monotone(self):
        w = np.array([-2.0, -0.5, 0.0, 0.5, 2.0])
        out = inverse_transform(w, "sqrt")
        assert np.all(np.diff(out) >= 0)
        assert out[0] == 0.0

    def test_log_jacobian(self):
        x = np.array([1.0, np.e, 10.0])
        assert log_jacobian(x, "log") == pytest.approx(-np.sum(np.log(x)))
        assert log_jacobian(x, "none") == 0.0
        assert log_jacobian(x, "sqrt") == pytest.approx(-np.sum(np.log(2 * np.sqrt(x))))

    def test_apply_transform(self):
        s = apply_transform(TimeSeries("2020-01", [1.0, np.e]), "log")
        np.testing.assert_allclose(s.values, [0.0, 1.0])


class TestDifferencing:
    def test_polynomial(self):
        np.testing.assert_array_equal(DifferenceSpec(1, 1, 4).polynomial(),
                                      [1, -1, 0, 0, -1, 1])

    def test_first_difference(self):
        s = TimeSeries("2020-01", [1, 4, 9, 16])
        d = difference(s, DifferenceSpec(1))
        assert d.start == Month(2020, 2)
        np.testing.assert_array_equal(d.values, [3, 5, 7])

    def test_seasonal_difference_of_periodic_is_zero(self):
        x = np.tile([3.0, 1.0, 4.0, 1.0], 5)
        d = difference(TimeSeries("2020-01", x), DifferenceSpec(0, 1, 4))
        assert np.all(d.values == 0)

    def test_identity(self):
        s = TimeSeries("2020-01", [1.0, 2.0])
        assert difference(s, DifferenceSpec()) is s

    def test_too_short(self):
        with pytest.raises(LengthError):
            difference(TimeSeries("2020-01", np.arange(12.0)), DifferenceSpec(0, 1, 12))

    @pytest.mark.parametrize("d,D,S", [(1, 0, 1), (2, 0, 1), (0, 1, 12), (1, 1, 12), (2, 1, 4)])
    def test_round_trip_integer_data_exact(self, d, D, S):
        rng = np.random.default_rng(d * 100 + D * 10 + S)
        x = rng.integers(-1000, 1000, size=60).astype(float)
        spec = DifferenceSpec(d, D, S)
        s = TimeSeries("2010-01", x)
        back = inverse_difference(difference(s, spec), spec, x[:spec.order])
        assert back == s

    def test_round_trip_float_data(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal(100).cumsum()
        spec = DifferenceSpec(1, 1, 12)
        y = difference(TimeSeries("2010-01", x), spec).values
        np.testing.assert_allclose(integrate_values(y, spec, x[:13]), x, atol=1e-10)

    def test_wrong_initials(self):
        with pytest.raises(LengthError):
            integrate_values([1.0, 2.0], DifferenceSpec(1, 1, 4), [0.0])


class TestResample:
    def test_week_month_uses_week_ending(self):
        assert week_month(dt.date(2020, 5, 2)) == Month(2020, 5)
        assert week_month(dt.date(2020, 4, 25)) == Month(2020, 4)

    def test_matches_grouping_oracle(self):
        weeks = [dt.date(2019, 1, 5) + dt.timedelta(weeks=i) for i in range(52)]
        rng = np.random.default_rng(7)
        values = rng.integers(100, 200, 52).astype(float)
        out = resample_weekly_to_monthly(TimeSeries(weeks[0], values, Frequency.WEEKLY))
        assert out.frequency is Frequency.MONTHLY
        assert out.start == Month(2019, 1)
        np.testing.assert_allclose(out.values, monthly_means(weeks, values), rtol=1e-15)

    def test_constant_weekly_gives_constant_monthly(self):
        s = TimeSeries(dt.date(2019, 1, 5), np.full(60, 3.5), Frequency.WEEKLY)
        assert np.all(resample_weekly_to_monthly(s).values == 3.5)

    def test_requires_weekly_input(self):
        with pytest.raises(ValueError):
            resample_weekly_to_monthly(TimeSeries("2020-01", [1.0, 2.0]))
