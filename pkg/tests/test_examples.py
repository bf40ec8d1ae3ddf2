"""Worked examples with hand-checkable answers, one per documented case."""

import itertools
import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from fibhier.anneal import AnnealConfig, forward_anneal, make_instance, success_statistics
from fibhier.automata import build_ac, count_words, prune_to_avoidance, rung_dfa
from fibhier.cli import cmd_table
from fibhier.growth import plastic_closed_form, plastic_sequence, rounding_identity_scan, staircase
from fibhier.hobo import HoboPolynomial, ancilla_minimized_energies, all_assignments, build_hobo, quadratize, verify_reduction
from fibhier.spectra import HamiltonianSpec, energy, full_spectrum, kernel_equals_language, local_sector_rank
from fibhier.words import Word, boundary_flip_mffs, factor_set, fibonacci_word_prefix, scan_mffs


def W(s):
    return Word(s)


@pytest.mark.parametrize("n,prefix", [(1, "L"), (5, "LSLLS"), (13, "LSLLSLSLLSLLS")])
def test_prefixes(n, prefix):
    assert fibonacci_word_prefix(n).letters == prefix


def test_factor_sets():
    assert factor_set(W("LSL"), 2) == {W("LS"), W("SL")}
    p = fibonacci_word_prefix(100)
    assert len(factor_set(p, 4)) == 5
    assert factor_set(p, 2) == {W("LL"), W("LS"), W("SL")}


@pytest.mark.parametrize(
    "max_length,expected",
    [(3, ["SS", "LLL"]), (5, ["SS", "LLL", "SLSLS"]), (8, ["SS", "LLL", "SLSLS", "LLSLLSLL"])],
)
def test_scan(max_length, expected):
    assert [m.letters for m in scan_mffs(max_length)] == expected


def test_flip_recursion_by_hand():
    # LLL + SS flipped at 1-indexed positions 1, 3, 4
    assert W("LLLSS").flip([0, 2, 3]) == boundary_flip_mffs(5).members[2] == W("SLSLS")
    assert W("SLSLSLLL").flip([0, 4, 5]) == boundary_flip_mffs(6).members[3] == W("LLSLLSLL")
    assert [m.letters for m in boundary_flip_mffs(3)] == ["SS"]


def test_trie_sizes():
    ac = build_ac([W("SS")])
    assert ac.num_states == 3 and ac.terminal_states == [ac.labels.index("SS")]
    ac = build_ac([W("SS"), W("LLL")])
    assert ac.num_states == 6 and len(ac.terminal_states) == 2
    assert len(build_ac(boundary_flip_mffs(5).members).terminal_states) == 3


def test_golden_dfa_by_hand():
    dfa = rung_dfa(3)
    assert dfa.num_states == 2
    assert dfa.adjacency.tolist() == [[1, 1], [1, 0]]
    assert max(abs(np.linalg.eigvals(dfa.adjacency))) == pytest.approx((1 + math.sqrt(5)) / 2)


def test_everything_forbidden():
    dfa = prune_to_avoidance(build_ac([W("L"), W("S")]))
    assert count_words(dfa, 0) == 1
    assert all(count_words(dfa, N) == 0 for N in range(1, 5))


def test_empty_word_counts_once():
    assert all(count_words(rung_dfa(K), 0) == 1 for K in range(3, 9))


def test_staircase_examples():
    assert staircase(3).delta_h == ()
    assert staircase(4).delta_h[0] == pytest.approx(math.log(1.618034 / 1.324718), abs=1e-6)
    h = staircase(6).entropies
    assert all(a > b for a, b in zip(h, h[1:]))


def test_plastic_examples():
    a = plastic_sequence(12)
    assert a[:4] == [2, 3, 4, 5] and a[4:8] == [7, 9, 12, 16] and a[11] == 49
    cf = plastic_closed_form(60)
    with mpmath.workdps(70):
        rho = max(r for r in mpmath.polyroots([1, 0, -1, -1], maxsteps=200, extraprec=200) if mpmath.im(r) == 0)
        C = rho**7 / (3 * rho**2 - 1)
        assert abs(cf.rho - rho) < mpmath.mpf(10) ** -58
        assert abs(cf.C - C) < mpmath.mpf(10) ** -55
    assert float(abs(cf.sigma)) == pytest.approx(0.8688, abs=1e-4)
    assert rounding_identity_scan(4, 60).passed


@pytest.mark.parametrize(
    "K,x,E", [(4, "SLSLSLSLSLSL", 0), (4, "SSLSLSLSLSLS", 1), (3, "SSS", 2)]
)
def test_energy_examples(K, x, E):
    assert energy(HamiltonianSpec.unit(K, len(x)), W(x)) == E


def test_spectrum_examples():
    assert full_spectrum(HamiltonianSpec.unit(3, 12)).degeneracy == 377
    rep = full_spectrum(HamiltonianSpec.unit(3, 1))
    assert rep.degeneracy == 2 and rep.histogram == {0: 2}
    assert {w.letters for w in kernel_equals_language(HamiltonianSpec.unit(3, 2)).members} == {"LL", "LS", "SL"}
    k4 = kernel_equals_language(HamiltonianSpec.unit(4, 12))
    assert k4.equal and k4.kernel_size == 49


def test_k4_triples():
    d, words = local_sector_rank(4)
    assert d == 4 and {w.bitstring for w in words} == {"001", "010", "100", "101"}


def test_hobo_examples():
    assert dict(build_hobo(HamiltonianSpec.unit(3, 2)).terms) == {(0, 1): 1}
    spec = HamiltonianSpec.unit(4, 3)
    h = build_hobo(spec)
    assert h.degree == 3 and h.constant == 1
    for bits in itertools.product((0, 1), repeat=3):
        x1, x2, x3 = bits
        by_hand = x1 * x2 + x2 * x3 + (1 - x1) * (1 - x2) * (1 - x3)
        assert h.evaluate(bits) == by_hand == energy(spec, Word.from_bits(bits))
    assert build_hobo(HamiltonianSpec.unit(5, 10)).degree == 5


def test_quadratic_input_unchanged():
    h = build_hobo(HamiltonianSpec.unit(3, 12))
    q = quadratize(h, 8)
    assert q.num_ancillas == 0
    assert {(i, j): c for (i, j), c in q.quadratic.items()} == {t: c for t, c in h.terms.items() if len(t) == 2}
    assert verify_reduction(h, q).exact


def test_single_cubic_term():
    h = HoboPolynomial(4, {(0, 1, 2): Fraction(1)})
    q = quadratize(h, 10)
    assert q.num_ancillas == 1 and (q.ancillas[0].a, q.ancillas[0].b) == (0, 1)
    X = all_assignments(4)
    assert (ancilla_minimized_energies(q, X) == X[:, 0] * X[:, 1] * X[:, 2]).all()


def test_k5_ancillas_and_exactness():
    h = build_hobo(HamiltonianSpec.unit(5, 10))
    q = quadratize(h, 8)
    assert q.num_ancillas == 15 and verify_reduction(h, q).exact


def test_no_false_valids_k4():
    inst = make_instance(4, 12)
    rep = forward_anneal(inst.qubo, AnnealConfig(reads=500, sweeps=50, seed=9), inst.dfa)
    allowed = set(inst.dfa.words(12))
    assert set(rep.found) <= allowed
    summary = success_statistics([rep], 49)
    assert summary.degeneracy == 49 and summary.coverage == rep.distinct_found / 49


def test_statistics_examples():
    inst = make_instance(3, 8)
    cfg = AnnealConfig(reads=300, sweeps=100, seed=1)
    a = forward_anneal(inst.qubo, cfg, inst.dfa)
    b = forward_anneal(inst.qubo, AnnealConfig(reads=300, sweeps=100, seed=2), inst.dfa)
    assert a.success_rate == 1.0
    s = success_statistics([a], 55)
    assert s.median_success == 1.0 and s.coverage == a.distinct_found / 55
    merged = success_statistics([a, b], 55)
    assert merged.distinct_found == len(set(a.found) | set(b.found))


def test_table_examples():
    rows = cmd_table(6, [0, 12])["rows"]
    assert [r["lambda"] for r in rows] == pytest.approx([1.618034, 1.324718, 1.193859, 1.114798], abs=1e-5)
    assert [r["D"]["0"] for r in rows] == [1, 1, 1, 1]
    assert [r["D"]["12"] for r in rows[:2]] == [377, 49]
    assert [len(m) for m in boundary_flip_mffs(8)] == [2, 3, 5, 8, 13, 21]
