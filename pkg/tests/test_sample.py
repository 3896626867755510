import numpy as np
import pytest

from heavytail import Sample, SampleError


def test_sorted_descending_and_read_only():
    s = Sample.from_values([3.0, 1.0, 2.0])
    assert s.values.tolist() == [3.0, 2.0, 1.0]
    assert s.n == 3
    with pytest.raises(ValueError):
        s.values[0] = 5.0


def test_keeps_original_order_on_request():
    s = Sample.from_values([3.0, 1.0, 2.0], keep_original=True)
    assert s.original.tolist() == [3.0, 1.0, 2.0]
    assert Sample.from_values([3.0, 1.0]).original is None


@pytest.mark.parametrize(
    "bad",
    [[1.0], [], [1.0, 0.0], [1.0, -2.0], [1.0, float("nan")], [1.0, float("inf")]],
)
def test_rejects_invalid(bad):
    with pytest.raises(SampleError):
        Sample.from_values(bad)


def test_rejects_2d():
    with pytest.raises(SampleError):
        Sample.from_values(np.ones((2, 2)))


def test_logs_and_top():
    s = Sample.from_values([np.e, 1.0, np.e**2])
    np.testing.assert_allclose(s.logs, [2.0, 1.0, 0.0])
    assert s.top(2).values.tolist() == [np.e**2, np.e]
    with pytest.raises(SampleError):
        s.top(1)
