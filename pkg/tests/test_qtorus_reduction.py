"""
量子 τ 級数の構造的簡約のテスト
"""
from fractions import Fraction

import pytest
import sympy

from app.models.verification import StructuralMismatch, UnknownCheck
from app.services.qtorus_reduction import (
    Block,
    collapse_check,
    cq_prefactor,
    load_series,
    normalize,
    quantum_tau_reduce,
    series_product,
)

q1, q2, Z = sympy.symbols("q1 q2 Z", positive=True)
n = sympy.Symbol("n")


def test_a_conjugation_on_parameters():
    block = Block(2, (sympy.Integer(1), sympy.Integer(-1)), (sympy.Integer(0), sympy.Integer(2)))
    moved = block.a_conjugate()
    assert moved.kind == 1
    # q1 q2^-1 -> q1^2、q2^2 -> q1^-1 q2
    assert moved.u == (2, 0)
    assert moved.z == (-1, 1)


def test_a_conjugation_needs_second_kind():
    block = Block(1, (sympy.Integer(0), sympy.Integer(0)), (sympy.Integer(0), sympy.Integer(0)))
    with pytest.raises(StructuralMismatch):
        block.a_conjugate()


@pytest.mark.parametrize("shift", [0, 1, -1, 2])
def test_cq_prefactor(shift):
    prefactor, _ = cq_prefactor(shift)
    assert sympy.simplify(prefactor["u"] - shift * n) == 0
    assert sympy.simplify(prefactor["Z"] - 2 * n ** 2) == 0
    assert sympy.simplify(prefactor["q1"] - 2 * shift * n ** 2) == 0
    assert sympy.simplify(prefactor["q2"] - 2 * shift * n ** 2) == 0


def test_cq_constant_part_ignores_shift():
    _, e0 = cq_prefactor(0)
    _, e3 = cq_prefactor(3)
    assert sympy.simplify(e0 - e3) == 0


def test_product_normal_form():
    series = load_series()
    term = normalize(series_product(1, series["T1"], series["T4"]))
    assert term.shift == 1
    assert term.a == 2 and term.b == 1
    assert term.cosets == (Fraction(1, 4), Fraction(3, 4))


def test_commutator_t1_t3():
    result = quantum_tau_reduce("T1T3")
    assert not result.merged
    assert len(result.identities) == 2
    assert result.identities[0]["lhs"]["index"] == ["1/4"]
    assert result.identities[0]["rhs"]["index"] == ["3/4"]
    assert result.factor_matches


def test_commutator_t1_t2_merges_classes():
    result = quantum_tau_reduce("T1T2")
    assert result.merged
    assert result.identities[0]["lhs"]["index"] == ["0", "1/2"]
    assert result.identities[0]["lhs"]["shift"] == 1
    assert result.identities[0]["rhs"]["shift"] == -1
    assert result.factor_matches


def test_commutator_t1_t4_factor():
    result = quantum_tau_reduce("T1T4")
    assert sympy.simplify(result.factor - (q1 * q2) ** sympy.Rational(1, 4)) == 0
    assert not result.factor_matches


def test_bilinear_t1_t1():
    result = quantum_tau_reduce("T1T1")
    assert result.identities[0]["lhs"]["shift"] == 2
    assert result.identities[0]["rhs"]["shift"] == 0
    assert sympy.simplify(result.factor - (1 - q1 * q2 * sympy.sqrt(Z))) == 0
    assert result.to_dict()["display_factor"] == str(1 - q1 * q2 * Z)


def test_unknown_relation():
    with pytest.raises(UnknownCheck):
        quantum_tau_reduce("T2T3")


def test_parameters_collapse_at_p_one():
    assert collapse_check()["holds"]
