import itertools

import numpy as np
import pytest

from fibhier.automata import count_words
from fibhier.spectra import (
    HamiltonianSpec,
    SizeError,
    energies,
    energy,
    full_spectrum,
    kernel_equals_language,
    local_sector_rank,
)
from fibhier.words import Word


def test_energy_counts_overlapping_windows():
    spec = HamiltonianSpec.unit(4, 6)
    assert energy(spec, Word("LLLLSS")) == 2 + 1
    assert energy(spec, Word("LSLLSL")) == 0


def test_vectorised_energies_match_scalar():
    spec = HamiltonianSpec.unit(5, 9)
    E = energies(spec)
    for v in range(0, 512, 7):
        assert E[v] == energy(spec, Word.from_int(v, 9))


def test_k4_n12_spectrum():
    rep = full_spectrum(HamiltonianSpec.unit(4, 12))
    assert rep.degeneracy == 49 and rep.ground_energy == 0 and rep.gap == 1
    assert all(isinstance(e, int) and e >= 0 for e in rep.histogram)
    assert sum(rep.histogram.values()) == 4096
    assert sorted(rep.histogram) == list(range(len(rep.histogram)))


def test_k5_kernel_is_language():
    spec = HamiltonianSpec.unit(5, 10)
    rep = kernel_equals_language(spec)
    assert rep.equal and rep.kernel_size == count_words(spec.dfa(), 10) == 14


def test_kernel_by_brute_force():
    spec = HamiltonianSpec.unit(4, 10)
    pats = [m.letters for m in spec.patterns]
    brute = {"".join(t) for t in itertools.product("LS", repeat=10) if not any(p in "".join(t) for p in pats)}
    assert {w.letters for w in kernel_equals_language(spec).members} == brute


def test_entropy_couplings_keep_kernel():
    spec = HamiltonianSpec.entropy_scaled(6, 12)
    assert not spec.integer_couplings
    rep = full_spectrum(spec)
    assert rep.ground_energy == 0 and rep.degeneracy == 13


def test_size_cap():
    with pytest.raises(SizeError):
        full_spectrum(HamiltonianSpec.unit(4, 21))


def test_local_sector_ranks():
    d, words = local_sector_rank(3)
    assert d == 5
    assert {w.bitstring for w in words} == {"000", "001", "010", "100", "101"}
    assert [local_sector_rank(K)[0] for K in (4, 5, 6)] == [4, 4, 4]


def test_invalid_specs():
    with pytest.raises(ValueError):
        HamiltonianSpec.unit(4, 0)
    with pytest.raises(ValueError):
        HamiltonianSpec.build(4, 5, "random")
    with pytest.raises(ValueError):
        HamiltonianSpec(K=3, N=4, patterns=(Word("SS"),), couplings=(0,))


def test_energies_dtype():
    assert energies(HamiltonianSpec.unit(3, 4)).dtype == np.int64
