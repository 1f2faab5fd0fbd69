"""
τ シード（A クラスター）のテスト
"""
import numpy as np
import pytest

from app.models.verification import FrozenVertexMutation, IndexOutOfRange, StructuralMismatch
from app.services.acluster import (
    apply_tau_word,
    bilinear_residuals,
    casimir_shift,
    evaluate_on_tau,
    frozen_rows_after,
    frozen_transition,
    initial_tau_seed,
    laurent_check,
    mutate_tau,
    permute_tau,
    tau_orbit,
    tau_scalar_residual,
    tau_translation,
    verify_bilinear,
    verify_intertwining,
    y_from_tau,
    y_product,
)
from app.services.quiver import GroupWord, Inv, Perm, invert_word
from app.services.symkernel import parse


@pytest.fixture
def seed6():
    return initial_tau_seed("A7p-ext6")


@pytest.fixture
def seed8():
    return initial_tau_seed("A7p-ext8")


def test_initial_y_from_tau(seed6):
    ys = y_from_tau(seed6)
    assert ys[0].equals(parse("tau2^-2*tau4^2*q^(1/2)*Z^(1/2)"))
    assert y_product(seed6).equals(parse("q"))


def test_specialized_eight_row_product(seed8):
    assert y_product(seed8).equals(parse("q0^2*q1^-2"))
    assert y_product(initial_tau_seed("A7p-ext8", specialized=True)).equals(parse("q"))


def test_translation_tau_images(seed6, a7p):
    image = apply_tau_word(seed6, a7p.word("T"))
    expected = [
        "tau2",
        "(tau2^2 + q^(1/2)*Z^(1/2)*tau4^2)/tau1",
        "tau4",
        "(tau4^2 + q^(1/2)*Z^(1/2)*tau2^2)/tau3",
    ]
    assert all(t.equals(parse(e)) for t, e in zip(image.taus, expected))
    assert all(t.is_laurent() for t in image.taus)


def test_translation_frozen_rows(a7p):
    T = a7p.word("T")
    assert frozen_rows_after("A7p-ext6", T) == [[4, -2, 4, -2], [2, -2, 2, -2]]
    assert frozen_rows_after("A7p-ext6", invert_word(T)) == [[0, 2, 0, 2], [2, -2, 2, -2]]


def test_rebasing_shifts_z(seed6, a7p):
    after = tau_translation(seed6, a7p.word("T"))
    assert after.ext == seed6.ext
    assert after.frozen[0].equals(parse("q^(1/4)"))
    assert after.frozen[1].equals(parse("q^(1/4)*Z^(1/4)"))
    shift = casimir_shift(a7p, seed6, "T")
    assert shift["Z"].equals(parse("q*Z"))
    assert shift["q"].equals(parse("q"))


def test_eight_row_translation(seed8, a7p):
    image = apply_tau_word(seed8, a7p.word("T"))
    assert image.taus[1].equals(parse("(q1*z1*tau2^2 + q0*z0*tau4^2)/tau1"))
    after = tau_translation(seed8, a7p.word("T"))
    expected = ["q0", "q0*z0", "q1", "q1*z1"]
    assert all(v.equals(parse(e)) for v, e in zip(after.frozen, expected))


def test_frozen_transition_prefers_block_solution():
    before = np.array([[1, 0, 1, 0], [1, -1, 1, -1], [-1, 0, -1, 0], [-1, 1, -1, 1]])
    after = np.array([before[0] + before[1], before[1], before[2] + before[3], before[3]])
    U = frozen_transition(before, after)
    assert [list(map(int, row)) for row in U] == [[1, 1, 0, 0], [0, 1, 0, 0], [0, 0, 1, 1], [0, 0, 0, 1]]


def test_frozen_transition_outside_span():
    with pytest.raises(StructuralMismatch):
        frozen_transition(np.array([[1, 0], [2, 0]]), np.array([[0, 1], [1, 0]]))


def test_translation_matches_x_cluster_closed_form(seed6, a7p):
    after = tau_translation(seed6, a7p.word("T"))
    for computed, form in zip(y_from_tau(after), a7p.closed_forms["T"]):
        assert computed.equals(evaluate_on_tau(parse(form), seed6))


def test_mutation_is_involution(seed6):
    for j in range(1, 5):
        back = mutate_tau(mutate_tau(seed6, j), j)
        assert back.ext == seed6.ext
        assert all(a.equals(b) for a, b in zip(back.taus, seed6.taus))


def test_frozen_and_out_of_range_mutations(seed6):
    with pytest.raises(FrozenVertexMutation):
        mutate_tau(seed6, 5)
    with pytest.raises(IndexOutOfRange):
        mutate_tau(seed6, 7)
    with pytest.raises(IndexOutOfRange):
        mutate_tau(seed6, 0)


def test_inversion_is_rejected(seed6):
    with pytest.raises(StructuralMismatch):
        apply_tau_word(seed6, GroupWord((Inv(),)))


def test_permutation_keeps_frozen_values(seed6):
    moved = permute_tau(seed6, Perm.from_cycles([[1, 2]]))
    assert [t.render() for t in moved.taus] == ["tau2", "tau1", "tau3", "tau4"]
    assert moved.frozen == seed6.frozen


def test_tau_mutation_intertwines_x_mutation():
    results = verify_intertwining()
    assert results
    assert all(r["holds"] for r in results), [r for r in results if not r["holds"]]


def test_bilinear_equations(seed6):
    first, second = bilinear_residuals(seed6)
    assert first.is_zero()
    assert second.is_zero()


def test_scalar_equation_from_tau_images(seed6):
    assert tau_scalar_residual(seed=seed6).is_zero()


def test_verify_bilinear_report():
    report = verify_bilinear()
    assert report["holds"]
    assert report["spot_checks"] and all(report["spot_checks"])


def test_laurent_phenomenon_short_orbit():
    orbit = tau_orbit("A7p-ext6", "T", steps=3)
    assert len(orbit) == 4
    assert laurent_check(orbit)["holds"]
