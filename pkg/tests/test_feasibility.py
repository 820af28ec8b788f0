import pytest

from permlab import crossover, projected_time, ryser_ops, total_steps

# Published reference totals at epsilon = 0.5. The n=4 and n=68 integers
# reproduce exactly and pin down every rounding choice in the parameter
# formulas. The n=100 reference integer is internally inconsistent with its
# own companion figures: the same source gives "approximately 2.64e23" and a
# projection of more than 8,366,379 years at 1e9 steps/s, both of which
# match 264,022,847,298,779,435,144,166 (the value these formulas produce),
# while the printed integer 64,022,847,298,779,435,144,166 is 6.4e22, a
# dropped leading digit. The consistent value is asserted here; the printed
# one is kept below as an expected failure so the discrepancy stays visible.
TOTAL_N4 = 3_932_754_162_118
TOTAL_N68 = 13_285_251_197_747_730_326_655
TOTAL_N100_AS_PRINTED = 64_022_847_298_779_435_144_166
TOTAL_N100_CONSISTENT = 264_022_847_298_779_435_144_166


def test_total_steps_n4_exact():
    assert total_steps(4, 0.5) == TOTAL_N4


def test_total_steps_n68_exact():
    assert total_steps(68, 0.5) == TOTAL_N68


def test_total_steps_n100_consistent_value():
    assert total_steps(100, 0.5) == TOTAL_N100_CONSISTENT


@pytest.mark.xfail(
    strict=True,
    reason="printed reference integer dropped its leading digit; see its own "
    "2.64e23 approximation and 8,366,379-year projection",
)
def test_total_steps_n100_as_printed():
    assert total_steps(100, 0.5) == TOTAL_N100_AS_PRINTED


def test_projection_years_match_reference_quotes():
    # "more than 420,984 years" at n=68 and "more than 8,366,379 years" at
    # n=100, both at one billion steps per second.
    years_68 = projected_time(total_steps(68, 0.5), 1e9)
    assert 420_984 < years_68 < 420_985
    years_100 = projected_time(total_steps(100, 0.5), 1e9)
    assert 8_366_379 < years_100 < 8_366_380


def test_projected_time_unit():
    steps = 31_557_600 * 10**9
    assert projected_time(steps, 1e9) == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(ValueError):
        projected_time(100, 0)


def test_ryser_ops():
    assert ryser_ops(4) == 64
    assert ryser_ops(1) == 2
    assert ryser_ops(10) == 10_240
    with pytest.raises(ValueError):
        ryser_ops(0)


def test_crossover_at_half():
    assert crossover(0.5) == 68


def test_crossover_straddles():
    assert total_steps(67, 0.5) >= ryser_ops(67)
    assert total_steps(68, 0.5) < ryser_ops(68)


def test_crossover_nonincreasing_in_epsilon():
    values = [crossover(eps) for eps in (0.25, 0.5, 1.0)]
    assert all(b <= a for a, b in zip(values, values[1:]))


def test_total_steps_strictly_increasing():
    previous = 0
    for n in range(4, 201):
        current = total_steps(n, 0.5)
        assert current > previous
        previous = current
