import cmath

import pytest

from laurent_algebra_system import LaurentPoly, lp
from newton_weight_system import (
    NewtonFaceError, PlanarODE, Weights, builtin_ode, builtin_weights, check_perturbation_lower_order,
    check_quasi_homogeneous, check_zs_invariance, detect_weights, exponent_lattice, newton_diagram,
    newton_face_weights,
)


def test_exponent_lattice_of_principal_parts():
    p1 = PlanarODE(lp("6*y^2 + z"), lp("x"))
    assert exponent_lattice(p1) == {(-1, 2, 1), (-1, 0, 2), (1, -1, 1)}
    p2 = PlanarODE(lp("2*y^3 + y*z"), lp("x"))
    assert exponent_lattice(p2) == {(-1, 3, 1), (-1, 1, 2), (1, -1, 1)}
    degenerate = PlanarODE(lp("x"), lp("x"))
    assert exponent_lattice(degenerate) == {(0, 0, 1), (1, -1, 1)}


@pytest.mark.parametrize("tag, expected", [
    ("P1", (3, 2, 4, 5)),
    ("P2", (2, 1, 2, 3)),
    ("P4", (1, 1, 1, 2)),
])
def test_weights_recovered_from_newton_face(tag, expected):
    ode = builtin_ode(tag)
    assert detect_weights(ode).as_tuple() == expected
    assert builtin_weights(tag).as_tuple() == expected


def test_face_plane_for_p1():
    diagram = newton_diagram(exponent_lattice(builtin_ode("P1")))
    assert diagram.unique_face
    assert diagram.normal == (3, 2, 4)
    assert diagram.level == 5
    for point in diagram.points:
        assert 3 * point[0] + 2 * point[1] + 4 * point[2] <= 5


def test_degenerate_diagram_has_no_face():
    with pytest.raises(NewtonFaceError):
        newton_face_weights({(0, 0, 1), (1, -1, 1)})


def test_weights_validate_coprimality():
    with pytest.raises(ValueError):
        Weights(2, 2, 2, 4)
    with pytest.raises(ValueError):
        Weights(6, 1, 1, 5)


def test_quasi_homogeneity():
    p1, w1 = builtin_ode("P1"), builtin_weights("P1")
    assert check_quasi_homogeneous(p1.principal_part(w1), w1)
    p2, w2 = builtin_ode("P2"), builtin_weights("P2")
    assert not check_quasi_homogeneous(p2, w2)
    assert check_quasi_homogeneous(PlanarODE(LaurentPoly.zero(), LaurentPoly.zero()), w1)


def test_perturbations_are_lower_order():
    p2, w2 = builtin_ode("P2"), builtin_weights("P2")
    assert p2.perturbation(w2) == (lp("alpha"), LaurentPoly.zero())
    assert check_perturbation_lower_order(p2.perturbation(w2), w2)
    p4, w4 = builtin_ode("P4"), builtin_weights("P4")
    assert p4.perturbation(w4) == (lp("-2*theta"), lp("-2*kappa"))
    assert check_perturbation_lower_order(p4.perturbation(w4), w4)
    principal = p2.principal_part(w2)
    assert not check_perturbation_lower_order((principal.f, principal.g), w2)


def test_zs_invariance():
    assert check_zs_invariance(builtin_ode("P1"), builtin_weights("P1"))
    assert check_zs_invariance(builtin_ode("P2"), builtin_weights("P2"))
    assert not check_zs_invariance(PlanarODE(lp("y"), lp("x")), Weights(3, 2, 4, 5))


def _root_of_unity_oracle(ode, w, sample=(0.3 + 0.7j, -1.1 + 0.2j, 0.9 - 0.4j)):
    for k in range(1, w.s):
        omega = cmath.exp(2j * cmath.pi * k / w.s)
        x, y, z = sample
        moved = {"x": omega ** w.p * x, "y": omega ** w.q * y, "z": omega ** w.r * z, "alpha": 0.25}
        here = {"x": x, "y": y, "z": z, "alpha": 0.25}
        lhs_f = ode.f.evaluate(moved)
        lhs_g = ode.g.evaluate(moved)
        if abs(lhs_f - omega ** (w.s - w.r + w.p) * ode.f.evaluate(here)) > 1e-12:
            return False
        if abs(lhs_g - omega ** (w.s - w.r + w.q) * ode.g.evaluate(here)) > 1e-12:
            return False
    return True


@pytest.mark.parametrize("ode, w", [
    (PlanarODE(lp("6*y^2 + z"), lp("x")), Weights(3, 2, 4, 5)),
    (PlanarODE(lp("2*y^3 + y*z + alpha"), lp("x")), Weights(2, 1, 2, 3)),
    (PlanarODE(lp("y"), lp("x")), Weights(3, 2, 4, 5)),
    (PlanarODE(lp("x*y + z"), lp("y^2")), Weights(1, 1, 1, 2)),
])
def test_congruence_check_agrees_with_roots_of_unity(ode, w):
    assert check_zs_invariance(ode, w) == _root_of_unity_oracle(ode, w)
