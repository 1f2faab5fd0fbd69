"""
X クラスターと q-Painlevé 群作用のテスト
"""
from fractions import Fraction

import pytest

from app.models.verification import MismatchReport, UnknownLabel, VerificationError
from app.services.painleve_cases import case_labels, get_case
from app.services.quiver import GroupWord, Perm
from app.services.symkernel import RatExpr, parse
from app.services.xcluster import (
    affine_coxeter_matrix,
    apply_word,
    casimir_track,
    coxeter_isomorphic,
    evolve,
    initial_seed,
    invert_seed,
    mutate_seed,
    permute_seed,
    poisson_coefficient,
    scalar_equation_residual,
    transport,
    verify_brackets,
    verify_closed_forms,
    verify_coordinate_images,
    verify_coxeter,
    verify_hamiltonian,
    verify_identities,
    verify_relation,
    verify_relations,
    verify_scalar_equation,
    word_order,
)


def test_case_catalog():
    assert case_labels() == ["A2", "A3", "A4", "A5", "A6", "A7", "A7p", "A8"]
    with pytest.raises(UnknownLabel):
        get_case("A9")


def test_a7p_translation_keeps_quiver(a7p):
    seed = apply_word(initial_seed(a7p.quiver), a7p.word("T"))
    assert seed.quiver.eps == a7p.quiver.eps
    assert seed.var(2).equals(parse("y1^-1"))
    assert seed.var(4).equals(parse("y3^-1"))


@pytest.mark.parametrize("label", ["A8", "A7p", "A6", "A5"])
def test_mutation_is_an_involution_on_seeds(label):
    seed = initial_seed(get_case(label).quiver)
    for j in range(1, seed.quiver.n + 1):
        back = mutate_seed(mutate_seed(seed, j), j)
        assert back.quiver == seed.quiver
        assert all(a.equals(b) for a, b in zip(back.vars, seed.vars))


def test_inversion_inverts_every_variable(a7p):
    seed = invert_seed(initial_seed(a7p.quiver))
    assert all(v.equals(RatExpr.gen(f"y{i}") ** -1) for i, v in enumerate(seed.vars, start=1))
    assert seed.quiver.entry(1, 2) == -a7p.quiver.entry(1, 2)


def test_identity_word_keeps_seed(a7p):
    seed = initial_seed(a7p.quiver)
    assert apply_word(seed, GroupWord.identity()) == seed


def test_permutation_moves_variables(a7p):
    seed = permute_seed(initial_seed(a7p.quiver), Perm.from_cycles([[4, 3, 2, 1]]))
    assert [v.render() for v in seed.vars] == ["y2", "y3", "y4", "y1"]


def test_a7p_relations(a7p):
    for lhs, rhs in [("pi2*T*pi2", "T^-1"), ("pi1*T*pi1", "pi2^2*T")]:
        assert verify_relation(a7p, lhs, rhs)


def test_a7p_relation_symbolic(a7p):
    assert verify_relation(a7p, "pi2*T*pi2", "T^-1", method="symbolic")


def test_false_relation_is_detected(a7p):
    assert not verify_relation(a7p, "T", "e")
    assert not verify_relation(a7p, "pi2^2", "e")


@pytest.mark.parametrize("label", ["A8", "A7p", "A4", "A3", "A2"])
def test_registered_relations_hold(label):
    results = verify_relations(get_case(label))
    assert results
    assert {r["method"] for r in results} == {"symbolic"}
    assert all(r["holds"] for r in results), [r for r in results if not r["holds"]]


@pytest.mark.slow
@pytest.mark.parametrize("label", ["A6", "A5"])
def test_registered_relations_hold_large(label):
    results = verify_relations(get_case(label))
    assert all(r["holds"] for r in results), [r for r in results if not r["holds"]]


def test_numeric_relations_on_request(a7p):
    results = verify_relations(a7p, method="numeric")
    assert {r["method"] for r in results} == {"numeric"}
    assert all(r["holds"] for r in results)
    assert not verify_relation(a7p, "T", "e", method="numeric")
    with pytest.raises(VerificationError):
        verify_relation(a7p, "T", "e", method="guess")


def test_word_order_is_exact(a7p):
    quiver = a7p.quiver
    assert word_order(quiver, a7p.word("s0")) == 2
    assert word_order(quiver, a7p.word("s0*s1")) is None
    assert word_order(quiver, a7p.word("T")) is None
    assert word_order(quiver, a7p.word("s0"), method="numeric") == 2


@pytest.mark.parametrize("label,kind", [("A7p", "A1"), ("A6", "A1"), ("A5", "A2"), ("A4", "A4")])
def test_coxeter_structure(label, kind):
    results = verify_coxeter(get_case(label))
    assert any(r["type"] == kind for r in results)
    assert all(r["holds"] for r in results)


@pytest.mark.slow
@pytest.mark.parametrize("label", ["A3", "A2"])
def test_coxeter_structure_large(label):
    assert all(r["holds"] for r in verify_coxeter(get_case(label)))


def test_affine_type_a4_is_a_pentagon():
    pentagon = [[1, 3, 2, 2, 3], [3, 1, 3, 2, 2], [2, 3, 1, 3, 2], [2, 2, 3, 1, 3], [3, 2, 2, 3, 1]]
    assert coxeter_isomorphic(pentagon, affine_coxeter_matrix("A4")) is not None
    assert coxeter_isomorphic(pentagon, affine_coxeter_matrix("D4")) is None


@pytest.mark.parametrize("label", ["A8", "A7p", "A7", "A6", "A4"])
def test_closed_forms(label):
    report = verify_closed_forms(get_case(label))
    assert report["generators"]


@pytest.mark.slow
@pytest.mark.parametrize("label", ["A5", "A3", "A2"])
def test_closed_forms_large(label):
    assert verify_closed_forms(get_case(label))["generators"]


def test_closed_form_mismatch_is_reported(a7p):
    a7p.closed_forms["broken"] = ["y1", "y2", "y3", "y4"]
    a7p.generators["broken"] = a7p.word("T")
    try:
        with pytest.raises(MismatchReport) as info:
            verify_closed_forms(a7p, ["broken"])
        assert len(info.value.mismatches) == 4
    finally:
        del a7p.closed_forms["broken"]
        del a7p.generators["broken"]


def test_casimir_track_a7p(a7p):
    images = casimir_track(a7p, "T")
    assert images["Z"].equals(parse("q*Z"))
    assert images["q"].equals(parse("q"))
    images = casimir_track(a7p, "pi1")
    assert images["Z"].equals(parse("Z^-1"))
    assert images["q"].equals(parse("q^-1"))


@pytest.mark.parametrize("label", ["A8", "A7p", "A7", "A5", "A3"])
def test_coordinate_images(label):
    results = verify_coordinate_images(get_case(label))
    assert results
    assert all(r["holds"] for r in results), [r for r in results if not r["holds"]]


@pytest.mark.parametrize("label", ["A7p", "A6", "A5", "A4", "A3", "A2"])
def test_casimir_relations_and_double_definitions(label):
    results = verify_identities(get_case(label))
    assert all(r["holds"] for r in results)


@pytest.mark.parametrize("label", ["A8", "A7p", "A6", "A5", "A4", "A3", "A2"])
def test_brackets(label):
    results = verify_brackets(get_case(label))
    assert all(r["holds"] for r in results), [r for r in results if not r["holds"]]


def test_a8_bracket_value(a8):
    assert poisson_coefficient(a8.quiver, parse("y1"), parse("y2")) == 3


def test_a8_hamiltonian(a8):
    assert verify_hamiltonian(a8, "pi").status == "exact"
    assert verify_hamiltonian(a8, "sigma").status == "exact"


def test_unconstrained_residual_is_nonzero(a8):
    result = verify_hamiltonian(a8, "pi", constrained=False)
    assert result.status == "nonzero"
    assert not result.residual.is_zero()


def test_a7p_toda_hamiltonian(a7p):
    assert verify_hamiltonian(a7p, "T").status == "exact"
    assert verify_hamiltonian(a7p, "pi2^2").status == "exact"


def test_a7_hamiltonian(a7):
    assert verify_hamiltonian(a7, "T", "H").status == "exact"
    assert verify_hamiltonian(a7, "T", "H_printed").status == "nonzero"


def test_a6_hamiltonian_normalization():
    case = get_case("A6")
    printed = verify_hamiltonian(case, "T", "H")
    assert printed.status == "projective"
    assert printed.ratio is not None
    assert verify_hamiltonian(case, "T", "H_normalized").status == "exact"


@pytest.mark.parametrize("label,generator", [("A5", "s1"), ("A3", "s2")])
def test_weyl_reflections_preserve_hamiltonian(label, generator):
    assert verify_hamiltonian(get_case(label), generator).status == "exact"


def test_a4_reflection_without_constraint():
    result = verify_hamiltonian(get_case("A4"), "s1", constrained=False)
    assert result.status == "exact"


def test_scalar_equations(a7p, a7):
    assert scalar_equation_residual(a7p).is_zero()
    assert scalar_equation_residual(a7).is_zero()
    report = verify_scalar_equation(a7p)
    assert report["holds"]


def test_evolve_numeric(a7p):
    orbit = evolve(a7p, "T", steps=2, point=[Fraction(1), Fraction(2), Fraction(3), Fraction(4)])
    assert len(orbit) == 3
    assert orbit[0] == ["1", "2", "3", "4"]
    # T: y2 <- y1^{-1}
    assert orbit[1][1] == "1"


def test_evolve_symbolic(a7p):
    orbit = evolve(a7p, "pi2", steps=4)
    assert orbit[4] == orbit[0]


@pytest.mark.parametrize("label,generator", [("A7p", "T"), ("A5", "s1"), ("A8", "sigma")])
def test_pullback_of_seed_variables_matches_pushforward(label, generator):
    case = get_case(label)
    image = apply_word(initial_seed(case.quiver), case.word(generator))
    for i in range(1, case.n + 1):
        assert transport(RatExpr.gen(f"y{i}"), case.quiver, case.word(generator)).equals(image.var(i))
