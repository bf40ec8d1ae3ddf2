import numpy as np
import pytest

from fibhier.anneal import (
    AnnealConfig,
    RefineSchedule,
    distance_one_starts,
    forward_anneal,
    make_instance,
    refine_from_starts,
    reverse_refine,
    success_statistics,
)
from fibhier.words import Word


@pytest.fixture(scope="module")
def k5():
    return make_instance(5, 10, R=8)


def test_forward_is_deterministic(k5):
    cfg = AnnealConfig(reads=200, sweeps=20, seed=7)
    a = forward_anneal(k5.qubo, cfg, k5.dfa)
    b = forward_anneal(k5.qubo, cfg, k5.dfa)
    assert np.array_equal(a.samples, b.samples)
    assert a.to_json() == b.to_json()


def test_seed_changes_samples(k5):
    a = forward_anneal(k5.qubo, AnnealConfig(reads=200, sweeps=5, seed=1), k5.dfa)
    b = forward_anneal(k5.qubo, AnnealConfig(reads=200, sweeps=5, seed=2), k5.dfa)
    assert not np.array_equal(a.samples, b.samples)


def test_zero_sweeps_is_uniform_guessing():
    inst = make_instance(4, 12)
    rep = forward_anneal(inst.qubo, AnnealConfig(reads=20000, sweeps=0, seed=3), inst.dfa)
    assert rep.success_rate == pytest.approx(49 / 4096, abs=0.004)


def test_reported_energies_match_model(k5):
    rep = forward_anneal(k5.qubo, AnnealConfig(reads=50, sweeps=30, seed=5, moves="mixed"), k5.dfa)
    for x, e in zip(rep.samples, rep.energies):
        assert e == pytest.approx(float(k5.qubo.energy(x)))
    for w, ok in zip(rep.projected(), rep.valid):
        assert ok == k5.dfa.accepts(w)


def test_valid_start_at_zero_depth_stays_valid(k5):
    start = next(k5.dfa.words(10))
    rep = reverse_refine(k5.qubo, start, RefineSchedule(0.0), AnnealConfig(reads=100, sweeps=10), k5.dfa)
    assert rep.success_rate == 1.0
    assert set(rep.found) == {start}


def test_gauge_does_not_change_reverse_outcomes(k5):
    start = distance_one_starts(k5.dfa, 10)[0]
    base = AnnealConfig(reads=300, sweeps=10, seed=11, moves="lifted")
    plain = reverse_refine(k5.qubo, start, RefineSchedule(), base, k5.dfa)
    gauged = reverse_refine(k5.qubo, start, RefineSchedule(), AnnealConfig(**{**base.__dict__, "gauge": True}), k5.dfa)
    assert np.array_equal(plain.samples, gauged.samples)
    assert gauged.gauge_mask is not None


def test_distance_one_starts_are_invalid_neighbours(k5):
    starts = distance_one_starts(k5.dfa, 10)
    assert len(starts) == 106
    valid = list(k5.dfa.words(10))
    for s in starts:
        assert not k5.dfa.accepts(s)
        assert any(sum(a != b for a, b in zip(s.letters, v.letters)) == 1 for v in valid)
    assert len(distance_one_starts(k5.dfa, 10, 10)) == 10


def test_all_s_start_with_shallow_depth_trails_forward():
    inst = make_instance(4, 12)
    cfg = AnnealConfig(reads=2000, sweeps=10, seed=1)
    forward = forward_anneal(inst.qubo, cfg, inst.dfa)
    stuck = reverse_refine(inst.qubo, Word("S" * 12), RefineSchedule(), cfg, inst.dfa)
    assert stuck.success_rate < forward.success_rate


def test_lifted_moves_repair_all_s_start():
    # composite moves remove the ancilla barrier that traps single flips
    inst = make_instance(4, 12)
    cfg = AnnealConfig(reads=2000, sweeps=10, seed=1, moves="lifted")
    rep = reverse_refine(inst.qubo, Word("S" * 12), RefineSchedule(), cfg, inst.dfa)
    assert rep.success_rate > 0.99


def test_refine_splits_reads(k5):
    starts = distance_one_starts(k5.dfa, 10, 4)
    reps = refine_from_starts(k5.qubo, starts, RefineSchedule(), AnnealConfig(reads=40, sweeps=5), k5.dfa)
    assert [r.reads for r in reps] == [10] * 4
    summary = success_statistics(reps, 14)
    assert summary.total_reads == 40
    assert 0 <= summary.coverage <= 1


def test_refine_schedule_shape():
    betas = RefineSchedule(0.5).betas(AnnealConfig(sweeps=5, beta_initial=0.1))
    assert np.isinf(betas[0]) and np.isinf(betas[-1])
    assert betas[2] == pytest.approx(0.2)
    assert np.isinf(RefineSchedule(0.0).betas(AnnealConfig(sweeps=4))).all()


def test_config_validation():
    with pytest.raises(ValueError):
        AnnealConfig(moves="cluster")
    with pytest.raises(ValueError):
        AnnealConfig(beta_initial=5, beta_final=1)
    with pytest.raises(ValueError):
        RefineSchedule(-1)


def test_csv_export(k5):
    rep = forward_anneal(k5.qubo, AnnealConfig(reads=5, sweeps=2), k5.dfa)
    lines = rep.to_csv().strip().splitlines()
    assert len(lines) == 6
