"""
Nekrasov 関数と双線形関係の数値検証のテスト
"""
from fractions import Fraction

import mpmath
import pytest

from app.config.settings import NEKRASOV_POINTS, NEKRASOV_SUITE_ORDER
from app.models.verification import BaseOnUnitCircle, PoleAtPoint, StructuralMismatch, UnknownCheck
from app.services.nekrasov import (
    Partition,
    arm_leg,
    block_parameters,
    c_big,
    c_small,
    classical_tau_check,
    inst_series,
    nek_weight,
    normalizations,
    partition_pairs,
    partitions_of,
    pochhammer,
    verify_conjecture,
)

POINT = dict(u=3, q1=Fraction(2, 5), q2=Fraction(3, 7))
DIGITS = 30


def _close(a, b, tol=mpmath.mpf(10) ** -25):
    return abs(a - b) <= tol * max(1, abs(b))


def test_partition_basics():
    lam = Partition((3, 1))
    assert lam.size == 4
    assert lam.conjugate == Partition((2, 1, 1))
    assert len(list(lam.boxes())) == 4
    assert arm_leg(lam, lam, (1, 1)) == (2, 1)
    with pytest.raises(StructuralMismatch):
        Partition((1, 2))


def test_partition_counts():
    assert [len(partitions_of(n)) for n in range(6)] == [1, 1, 2, 3, 5, 7]
    # 2 つ組の個数: 1, 2, 5, 10
    assert [len(list(partition_pairs(n))) for n in range(4)] == [1, 2, 5, 10]


def test_nek_weight_single_box():
    u, q1, q2 = Fraction(3), Fraction(2, 5), Fraction(3, 7)
    empty, box = Partition(), Partition((1,))
    assert nek_weight(box, empty, u, q1, q2) == 1 - u
    assert nek_weight(empty, box, u, q1, q2) == 1 - u / (q1 * q2)
    assert nek_weight(box, box, u, q1, q2) == (1 - u / q2) * (1 - u / q1)


def test_first_instanton_coefficient():
    u, q1, q2 = Fraction(3), Fraction(2, 5), Fraction(3, 7)
    series = inst_series(u, q1, q2, 2)
    assert series.coeffs[0] == 1
    expected = (1 / ((1 - 1 / q1) * (1 - 1 / q2))) * (
        1 / ((1 - u) * (1 - 1 / (u * q1 * q2))) + 1 / ((1 - 1 / u) * (1 - u / (q1 * q2)))
    )
    assert series.coeffs[1] == expected


def test_instanton_series_inversion_symmetry():
    forward = inst_series(Fraction(3), Fraction(2, 5), Fraction(3, 7), 3)
    backward = inst_series(Fraction(1, 3), Fraction(2, 5), Fraction(3, 7), 3)
    assert forward.coeffs == backward.coeffs


def test_parallel_series_matches_serial():
    serial = inst_series(Fraction(5), Fraction(1, 3), Fraction(2, 7), 4, max_workers=1)
    parallel = inst_series(Fraction(5), Fraction(1, 3), Fraction(2, 7), 4, max_workers=4)
    assert serial.coeffs == parallel.coeffs
    frame = parallel.to_frame()
    assert list(frame["order"]) == [0, 1, 2, 3, 4]


def test_pole_reported():
    with pytest.raises(PoleAtPoint):
        inst_series(1, Fraction(2, 5), Fraction(3, 7), 1)


def test_pochhammer_single_base_against_mpmath():
    with mpmath.workdps(40):
        for x in (Fraction(1, 3), Fraction(3)):
            value = pochhammer(x, [Fraction(2, 5)], DIGITS)
            expected = mpmath.qp(mpmath.mpf(x.numerator) / x.denominator, mpmath.mpf(2) / 5)
            assert abs(value.value - expected) <= value.err + mpmath.mpf(10) ** -DIGITS


def test_pochhammer_two_bases_against_product():
    x, t1, t2 = Fraction(3, 2), Fraction(1, 3), Fraction(1, 4)
    with mpmath.workdps(40):
        value = pochhammer(x, [t1, t2], DIGITS)
        expected = mpmath.mpf(1)
        for j in range(80):
            expected *= mpmath.qp(mpmath.mpf(3) / 2 * (mpmath.mpf(1) / 4) ** j, mpmath.mpf(1) / 3)
        assert _close(value.value, expected)


def test_pochhammer_base_inversion():
    x = Fraction(1, 3)
    with mpmath.workdps(40):
        outer = pochhammer(x, [Fraction(2), Fraction(1, 3)], DIGITS)
        inner = pochhammer(x / 2, [Fraction(1, 2), Fraction(1, 3)], DIGITS)
        assert _close(outer.value * inner.value, 1)


def test_pochhammer_edge_cases():
    assert pochhammer(0, [Fraction(1, 2)], DIGITS).value == 1
    with pytest.raises(BaseOnUnitCircle):
        pochhammer(Fraction(1, 2), [1, Fraction(1, 3)], DIGITS)


def test_normalizations():
    q1, q2 = Fraction(2, 5), Fraction(3, 7)
    assert normalizations(3, 1, "cq", q1, q2, DIGITS).value == 1
    with mpmath.workdps(40):
        assert _close(c_big(3, q1, q2, DIGITS).value, c_big(Fraction(1, 3), q1, q2, DIGITS).value)
        assert _close(c_small(3, Fraction(1, 2), q1, q2, DIGITS).value,
                      c_small(Fraction(1, 3), Fraction(1, 2), q1, q2, DIGITS).value)
    with pytest.raises(UnknownCheck):
        normalizations(3, 1, "F3", q1, q2, DIGITS)


def test_block_parameters():
    assert block_parameters(1, Fraction(2, 5), Fraction(3, 7)) == (Fraction(4, 25), Fraction(15, 14))
    assert block_parameters(2, Fraction(2, 5), Fraction(3, 7)) == (Fraction(14, 15), Fraction(9, 49))
    with pytest.raises(UnknownCheck):
        block_parameters(3, 1, 1)


def test_t1_t3_relation():
    report = verify_conjecture("FT1T3", max_order=Fraction(1, 8), digits=DIGITS, **POINT)
    assert [row["order"] for row in report.rows] == ["1/8"]
    assert report.holds
    assert report.to_dict()["truncation"]["budget_kind"] == "certified"


def test_no_terms_below_first_class():
    report = verify_conjecture("FT1T3", max_order=0, digits=DIGITS, **POINT)
    assert report.rows == []
    assert report.holds


@pytest.mark.parametrize("relation", ["FT1T4-plus", "FT1T4-minus"])
def test_t1_t4_relation_needs_quarter_power(relation):
    assert verify_conjecture(relation, max_order=Fraction(1, 8), digits=DIGITS, **POINT).holds
    displayed = verify_conjecture(relation, max_order=Fraction(1, 8), digits=DIGITS,
                                  factor_mode="display", **POINT)
    assert not displayed.holds


def test_t1_t2_relation():
    report = verify_conjecture("FT1T2", max_order=Fraction(1, 2), digits=DIGITS, **POINT)
    assert [row["order"] for row in report.rows] == ["0", "1/2"]
    assert report.holds


def test_t1_t1_relation():
    report = verify_conjecture("FT1T1", max_order=Fraction(1, 2), digits=DIGITS, **POINT)
    assert report.holds
    displayed = verify_conjecture("FT1T1", max_order=Fraction(1, 2), digits=DIGITS,
                                  factor_mode="display", **POINT)
    failing = [row["order"] for row in displayed.rows if not row["holds"]]
    assert failing == ["1/2"]
    assert report.to_dict()["truncation"]["max_abs_n"] == "1/2"


RELATIONS = ["FT1T1", "FT1T2", "FT1T3", "FT1T4-plus", "FT1T4-minus"]


@pytest.mark.parametrize("point", NEKRASOV_POINTS)
@pytest.mark.parametrize("relation", RELATIONS)
def test_relations_hold_beyond_leading_order(relation, point):
    u, q1, q2 = point
    report = verify_conjecture(relation, u=u, q1=q1, q2=q2, max_order=Fraction(5, 2), digits=60)
    orders = [Fraction(row["order"]) for row in report.rows]
    assert len(orders) >= 3
    assert max(orders) > min(orders) + 1
    for row in report.rows:
        assert mpmath.mpf(row["residual"]) <= mpmath.mpf(row["budget"]), row["order"]
    assert report.holds


@pytest.mark.parametrize("max_order, expected", [
    (Fraction(1, 8), ["1/8"]),
    (Fraction(9, 8), ["1/8", "9/8"]),
    (Fraction(5, 2), ["1/8", "9/8", "17/8"]),
])
def test_t1_t3_orders_grow_with_truncation(max_order, expected):
    report = verify_conjecture("FT1T3", max_order=max_order, digits=DIGITS, **POINT)
    assert [row["order"] for row in report.rows] == expected
    assert report.holds


def test_suite_order_reaches_two_orders_past_leading():
    assert Fraction(NEKRASOV_SUITE_ORDER) >= Fraction(5, 2)


def test_corrupted_sign_fails():
    report = verify_conjecture("FT1T3", max_order=Fraction(1, 8), digits=DIGITS,
                               corrupt_sign=True, **POINT)
    assert not report.holds
    assert not report.to_frame()["holds"].any()


def test_unknown_relation():
    with pytest.raises(UnknownCheck):
        verify_conjecture("FT2T3", **POINT)
    with pytest.raises(UnknownCheck):
        verify_conjecture("FT1T3", factor_mode="guess", **POINT)


@pytest.mark.slow
def test_classical_tau_report_shape():
    result = classical_tau_check(Fraction(3, 2), Fraction(1, 2), Fraction(1, 3),
                                 Z_values=["1/100"], M=2, N=2, digits=20)
    assert result["M"] == 2
    assert result["budget_kind"] == "estimated"
    sample = result["samples"][0]
    assert len(sample["sweep"]) == 2
    assert isinstance(sample["holds"], bool)
    assert sample["budget_kind"] == "estimated"
