"""
量子トーラスと量子流のテスト
"""
from fractions import Fraction

import numpy as np
import pytest

from app.models.verification import (
    FractionalPowerOfNonMonomial,
    IncompatiblePair,
    NonCoreDenominator,
    StructuralMismatch,
)
from app.services.qtorus import (
    SkewContext,
    SkewFraction,
    apply_quantum_atom,
    casimir_flow_check,
    compat_check,
    initial_quantum_seed,
    parameter_flow_check,
    quantum_context,
    quantum_mutate,
    quantum_tau_flow_and_prop,
    quantum_toda_check,
    relation_residuals,
    skew_mul,
    tau_context,
    verify_quantum_flow,
)
from app.services.quiver import Inv, get_ext_quiver, get_quiver
from app.services.symkernel import RatExpr


@pytest.fixture
def y_ctx(a7p_quiver):
    return quantum_context(a7p_quiver)


def test_y_commutation(y_ctx):
    y1, y2 = SkewFraction.gen(y_ctx, "y1"), SkewFraction.gen(y_ctx, "y2")
    assert y_ctx.core == ("y1", "y3")
    p4 = SkewFraction.scalar(y_ctx, RatExpr.gen("p", -4))
    assert skew_mul(y1, y2).equals(p4 * y2 * y1)
    assert y1.commutator_residual(y2, -4).is_zero()


def test_commutator_with_every_p_power(y_ctx):
    y1, y2, y3 = (SkewFraction.gen(y_ctx, g) for g in ("y1", "y2", "y3"))
    assert y2.commutator_residual(y1, 4).is_zero()
    assert y1.commutator_residual(y3, 0).is_zero()
    assert y1.commutator_residual(y2, Fraction(-4)).is_zero()
    assert not y1.commutator_residual(y2, 4).is_zero()


def test_scalar_on_the_left_of_skew_fraction(y_ctx):
    y1, y2 = SkewFraction.gen(y_ctx, "y1"), SkewFraction.gen(y_ctx, "y2")
    p4 = RatExpr.gen("p", -4)
    assert (p4 * (y2 * y1)).equals(y1 * y2)
    assert (RatExpr.const(2) + y1).equals(y1 + 2)
    assert (RatExpr.const(1) - y1).equals(-(y1 - 1))


def test_core_must_commute():
    with pytest.raises(StructuralMismatch):
        SkewContext.from_matrix(["a", "b"], [[0, 1], [-1, 0]], core=["a", "b"])


def test_non_antisymmetric_form_rejected():
    with pytest.raises(StructuralMismatch):
        SkewContext.from_matrix(["a", "b"], [[0, 1], [1, 0]])


def test_inverse_of_sum_rejected(y_ctx):
    y2 = SkewFraction.gen(y_ctx, "y2")
    with pytest.raises(NonCoreDenominator):
        (1 + y2).inverse()


def test_fractional_power_of_sum_rejected(y_ctx):
    y2 = SkewFraction.gen(y_ctx, "y2")
    with pytest.raises(FractionalPowerOfNonMonomial):
        (1 + y2) ** Fraction(1, 2)


def test_principal_half_power_squares_back(y_ctx):
    x = SkewFraction.gen(y_ctx, "y2") * SkewFraction.gen(y_ctx, "y1")
    assert ((x ** Fraction(1, 2)) ** 2).equals(x)
    assert (x * x.inverse()).equals(1)


def test_single_mutation_keeps_relations(y_ctx, a7p_quiver):
    seed = quantum_mutate(initial_quantum_seed(y_ctx, a7p_quiver), 1)
    assert all(r["holds"] for r in relation_residuals(seed))


def test_root_degree_mismatch():
    quiver = get_quiver("A7")
    seed = initial_quantum_seed(quantum_context(quiver), quiver, 2)
    with pytest.raises(StructuralMismatch):
        quantum_mutate(seed, 1)


def test_inversion_has_no_quantum_image(y_ctx, a7p_quiver):
    with pytest.raises(StructuralMismatch):
        apply_quantum_atom(initial_quantum_seed(y_ctx, a7p_quiver), Inv())


def test_quantum_flow_images():
    result = verify_quantum_flow()
    assert result["holds"]
    assert all(result["classical_limit"])
    assert result["half_image"]
    assert len(result["images"]) == 4


def test_casimir_flow():
    result = casimir_flow_check()
    assert result["central"] == {"Z": True, "q": True}
    assert result["images"] == {"Z": True, "q": True}


def test_quantum_toda_invariance():
    result = quantum_toda_check()
    assert result.residual.is_zero()
    assert result.classical_limit
    # q = 1 を課さなければ不変ではない
    assert result.to_dict()["unconstrained_residual_nonzero"]
    assert result.holds


def test_compat_convention():
    result = compat_check()
    assert result["convention"] == "B^T Lambda"
    assert result["value"] == -4
    assert result["transposed"] == 4
    assert result["y_form_consistent"]


def test_compat_perturbed_lambda():
    ext = get_ext_quiver("A7p-ext6")
    lam = np.array(ext.lam, dtype=int)
    lam[0, 3] += 1
    lam[3, 0] -= 1
    with pytest.raises(IncompatiblePair):
        compat_check(ext, lam)


def test_compat_rejects_non_antisymmetric():
    ext = get_ext_quiver("A7p-ext6")
    lam = np.array(ext.lam, dtype=int)
    lam[0, 1] = 1
    with pytest.raises(IncompatiblePair):
        compat_check(ext, lam)


def test_tau_core_drops_non_commuting_frozen():
    assert tau_context().core == ("tau1", "tau3", "tau6")


def test_quantum_tau_flow_and_prop():
    result = quantum_tau_flow_and_prop()
    assert result["holds"]
    names = {c["check"] for c in result["checks"]}
    assert {"underline inverts overline", "bilinear tau1", "bilinear tau3",
            "G under-G commutation", "half product", "product", "classical product"} <= names


def test_parameter_flow():
    result = parameter_flow_check()
    assert result["holds"]
    assert all(c["holds"] for c in result["a_conjugation"])
    assert result["s_shift"]
