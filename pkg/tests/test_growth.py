import math

import mpmath
import numpy as np
import pytest

from fibhier.automata import count_words, rung_dfa
from fibhier.growth import (
    GOLDEN_RATIO,
    PrecisionError,
    envelope_decay_rate,
    perron_root,
    plastic_closed_form,
    plastic_sequence,
    required_digits,
    rounding_identity_scan,
    staircase,
)

TABLE = [1.618034, 1.324718, 1.193859, 1.114798]


@pytest.mark.parametrize("K", range(3, 10))
def test_perron_matches_eigvals(K):
    A = rung_dfa(K).adjacency
    assert perron_root(rung_dfa(K)).value == pytest.approx(max(abs(np.linalg.eigvals(A))), abs=1e-10)


def test_lambda_table():
    lams = staircase(6).lambdas
    assert lams == pytest.approx(TABLE, abs=1e-6)
    assert lams[0] == pytest.approx(GOLDEN_RATIO, abs=1e-12)
    plastic = max(r.real for r in np.roots([1, 0, -1, -1]) if abs(r.imag) < 1e-12)
    assert lams[1] == pytest.approx(plastic, abs=1e-12)
    assert all(a > b for a, b in zip(lams, lams[1:]))


def test_lambdas_decrease_further_up():
    lams = staircase(9).lambdas
    assert all(a > b > 1 for a, b in zip(lams, lams[1:]))


def test_perron_zero_and_periodic_matrices():
    est = perron_root(np.zeros((3, 3)))
    assert est.value == 0 and est.degenerate
    # a 2-cycle has eigenvalues +-1; plain power iteration would oscillate
    assert perron_root(np.array([[0, 1], [1, 0]])).value == pytest.approx(1.0, abs=1e-10)


def test_perron_rejects_bad_input():
    with pytest.raises(ValueError):
        perron_root(np.array([[1, -1], [0, 1]]))
    with pytest.raises(ValueError):
        perron_root(np.eye(2), tolerance=0)


def test_staircase_couplings():
    rep = staircase(6)
    assert rep.J[0] == 1.0 and rep.J[1] == pytest.approx(1.0)
    assert rep.delta_h[0] == pytest.approx(math.log(GOLDEN_RATIO / TABLE[1]), abs=1e-5)
    assert list(rep.J[1:]) == pytest.approx([d / rep.delta_h[0] for d in rep.delta_h])
    custom = staircase(5, base=2.0, proportionality=3.0)
    assert custom.J == pytest.approx((2.0, 3.0 * custom.delta_h[0], 3.0 * custom.delta_h[1]))


def test_plastic_sequence_matches_automaton():
    dfa = rung_dfa(4)
    assert plastic_sequence(30) == [count_words(dfa, N) for N in range(1, 31)]
    assert plastic_sequence(12)[-1] == 49


def test_closed_form_identities():
    cf = plastic_closed_form(200)
    res = cf.residuals()
    tol = mpmath.mpf(10) ** -150
    assert res["rho_cubic"] < tol
    assert res["C_cubic"] < tol
    assert res["sigma_modulus"] < tol
    assert res["conjugate_pair"] < tol
    # the x = 1 root does not contribute
    assert res["unit"] < tol
    assert cf.C == pytest.approx(plastic_sequence(80)[-1] / cf.rho**80, abs=1e-9)


def test_closed_form_reproduces_terms():
    cf = plastic_closed_form(80)
    for n, a in enumerate(plastic_sequence(60), start=1):
        assert abs(cf.term(n) - a) < mpmath.mpf(10) ** -40


def test_rounding_identity_thousand_terms():
    scan = rounding_identity_scan(1000, 200)
    assert scan.passed and scan.first_failure is None
    assert scan.max_abs_deviation < 0.5


def test_rounding_scan_precision_guard():
    with pytest.raises(PrecisionError):
        rounding_identity_scan(1000, required_digits(1000) - 1)
    with pytest.raises(PrecisionError):
        plastic_closed_form(20)


def test_error_envelope_decays_like_sqrt_rho():
    scan = rounding_identity_scan(50, 100)
    E = [scan.samples[n] + 1 for n in range(1, 51)]
    rho = 1.324717957244746
    assert envelope_decay_rate(E) == pytest.approx(-0.5 * math.log(rho), abs=0.01)
