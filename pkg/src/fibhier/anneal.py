"""Classical annealing harness for the quadratized Hamiltonians.

Two protocols share one Metropolis kernel.  A sweep visits every QUBO
variable with single flips ("single"), every chain site with a composite
move that also re-derives the dependent ancillas ("lifted"), or both
("mixed"):

* forward annealing from uniform random states along a geometric
  inverse-temperature ramp;
* reverse refinement from a supplied state whose ancillas are lifted to
  their defining products.  The temperature rises linearly from zero to a
  peak set by ``depth`` and falls back to zero.

Each read draws from its own Mersenne Twister stream seeded from
``SeedSequence([seed, read_index])``, so results do not depend on how
reads are scheduled across threads.  A read counts as a success only if
its original-variable projection is accepted by the avoidance DFA.
"""

from __future__ import annotations

import csv
import io
import math
import statistics
import warnings
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numba as nb
import numpy as np

from .automata import AvoidanceDfa, count_words
from .hobo import HoboPolynomial, QuboModel, build_hobo, quadratize
from .spectra import HamiltonianSpec
from .words import Word

# peak temperature 0.15 at the default beta_initial; see RefineSchedule
DEFAULT_DEPTH = 0.015
_GAUGE_STREAM = 0x6761756765

warnings.filterwarnings("ignore", message=".*TBB threading layer.*")


MOVES = {"single": 0, "lifted": 1, "mixed": 2}


@nb.njit(cache=True)
def _flip(x, fld, J, i):
    dE = fld[i] if x[i] == 0 else -fld[i]
    step = 1.0 if x[i] == 0 else -1.0
    x[i] = 1 - x[i]
    for j in range(x.shape[0]):
        fld[j] += step * J[i, j]
    return dE


@nb.njit(cache=True)
def _accept(dE, beta):
    if dE <= 0.0:
        return True
    if beta == np.inf:
        return False
    return np.random.random() < math.exp(-beta * dE)


@nb.njit(cache=True, parallel=True)
def _metropolis(h, J, init, randomize, betas, seeds, moves, n_original, anc_a, anc_b, dep_ptr, dep_idx, gauge, out):
    reads, n = out.shape
    for r in nb.prange(reads):
        np.random.seed(seeds[r])
        x = np.empty(n, np.int8)
        for i in range(n):
            if not randomize:
                x[i] = init[i]
            elif moves == 1 and i >= n_original:
                # lifted-only dynamics starts on the consistent manifold
                x[i] = ((x[anc_a[i]] ^ gauge[anc_a[i]]) & (x[anc_b[i]] ^ gauge[anc_b[i]])) ^ gauge[i]
            else:
                x[i] = 1 if np.random.random() < 0.5 else 0
        fld = h.copy()
        for i in range(n):
            if x[i]:
                for j in range(n):
                    fld[j] += J[i, j]
        undo = np.empty(n, np.int64)
        for s in range(betas.shape[0]):
            beta = betas[s]
            if moves != 1:
                for i in range(n):
                    dE = fld[i] if x[i] == 0 else -fld[i]
                    if _accept(dE, beta):
                        _flip(x, fld, J, i)
            if moves != 0:
                # flip an original variable and re-derive every ancilla built on it
                for i in range(n_original):
                    dE = _flip(x, fld, J, i)
                    k = 0
                    for p in range(dep_ptr[i], dep_ptr[i + 1]):
                        y = dep_idx[p]
                        a, b = anc_a[y], anc_b[y]
                        if x[y] ^ gauge[y] != ((x[a] ^ gauge[a]) & (x[b] ^ gauge[b])):
                            dE += _flip(x, fld, J, y)
                            undo[k] = y
                            k += 1
                    if not _accept(dE, beta):
                        for t in range(k - 1, -1, -1):
                            _flip(x, fld, J, undo[t])
                        _flip(x, fld, J, i)
        for i in range(n):
            out[r, i] = x[i]


def _dependency_arrays(q: QuboModel):
    n = q.num_vars
    anc_a = np.full(n, -1, dtype=np.int64)
    anc_b = np.full(n, -1, dtype=np.int64)
    for anc in q.ancillas:
        anc_a[anc.var], anc_b[anc.var] = anc.a, anc.b
    ptr = [0]
    idx: list[int] = []
    for i in range(q.n_original):
        deps: set[int] = {i}
        for anc in q.ancillas:  # creation order is topological
            if anc.a in deps or anc.b in deps:
                deps.add(anc.var)
        idx.extend(sorted(deps - {i}))
        ptr.append(len(idx))
    return anc_a, anc_b, np.array(ptr, dtype=np.int64), np.array(idx, dtype=np.int64)


@dataclass(frozen=True)
class AnnealConfig:
    reads: int = 1000
    sweeps: int = 200
    beta_initial: float = 0.1
    beta_final: float = 10.0
    seed: int = 0
    gauge: bool = False
    moves: str = "single"

    def __post_init__(self) -> None:
        if self.moves not in MOVES:
            raise ValueError(f"moves must be one of {sorted(MOVES)}")
        if self.reads < 1:
            raise ValueError("reads must be >= 1")
        if self.sweeps < 0:
            raise ValueError("sweeps must be >= 0")
        if not 0 <= self.beta_initial <= self.beta_final:
            raise ValueError("schedule must satisfy 0 <= beta_initial <= beta_final")

    def forward_betas(self) -> np.ndarray:
        if self.sweeps == 0:
            return np.zeros(0)
        if self.beta_initial == 0:
            return np.linspace(0.0, self.beta_final, self.sweeps)
        return np.geomspace(self.beta_initial, self.beta_final, self.sweeps)

    def read_seeds(self, offset: int = 0) -> np.ndarray:
        return np.array(
            [np.random.SeedSequence([self.seed, offset + r]).generate_state(1, np.uint32)[0] for r in range(self.reads)],
            dtype=np.uint32,
        )


@dataclass(frozen=True)
class RefineSchedule:
    """Triangular temperature bump; peak temperature = depth / beta_initial."""

    depth: float = DEFAULT_DEPTH

    def __post_init__(self) -> None:
        if self.depth < 0:
            raise ValueError("depth must be >= 0")

    def betas(self, cfg: AnnealConfig) -> np.ndarray:
        S = cfg.sweeps
        if S == 0:
            return np.zeros(0)
        if cfg.beta_initial == 0:
            t_peak = math.inf if self.depth > 0 else 0.0
        else:
            t_peak = self.depth / cfg.beta_initial
        if S == 1:
            shape = np.zeros(1)
        else:
            s = np.arange(S) / (S - 1)
            shape = 1.0 - np.abs(2.0 * s - 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            T = t_peak * shape
            T = np.where(shape == 0, 0.0, T)
            return np.where(T > 0, 1.0 / T, np.inf)


@dataclass(frozen=True)
class AnnealReport:
    mode: str
    config: AnnealConfig
    n_original: int
    samples: np.ndarray = field(repr=False)
    energies: np.ndarray = field(repr=False)
    valid: np.ndarray = field(repr=False)
    target_degeneracy: int
    found: tuple[Word, ...]
    depth: float | None = None
    gauge_mask: tuple[int, ...] | None = None

    @property
    def reads(self) -> int:
        return int(self.samples.shape[0])

    @property
    def success_rate(self) -> float:
        return float(self.valid.mean())

    @property
    def distinct_found(self) -> int:
        return len(self.found)

    @property
    def coverage(self) -> float:
        return self.distinct_found / self.target_degeneracy if self.target_degeneracy else 0.0

    def projected(self) -> list[Word]:
        return [Word.from_bits(row[: self.n_original]) for row in self.samples]

    def to_json(self, include_reads: bool = False) -> dict:
        out = {
            "mode": self.mode,
            "config": asdict(self.config),
            "depth": self.depth,
            "reads": self.reads,
            "success_rate": self.success_rate,
            "valid_reads": int(self.valid.sum()),
            "distinct_found": self.distinct_found,
            "target_degeneracy": self.target_degeneracy,
            "coverage": self.coverage,
            "found": [w.letters for w in self.found],
            "min_energy": _num(self.energies.min()),
            "gauge_mask": None if self.gauge_mask is None else "".join(map(str, self.gauge_mask)),
        }
        if include_reads:
            out["per_read"] = [
                {"energy": _num(e), "word": w.letters, "valid": bool(v)}
                for e, w, v in zip(self.energies, self.projected(), self.valid)
            ]
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["read", "energy", "word", "valid"])
        for i, (e, word, v) in enumerate(zip(self.energies, self.projected(), self.valid)):
            w.writerow([i, _num(e), word.letters, int(bool(v))])
        return buf.getvalue()


def _num(v):
    v = float(v)
    return int(v) if v.is_integer() else v


def _gauge(offset: float, h: np.ndarray, J: np.ndarray, g: np.ndarray):
    """Rewrite the model in variables x' = x XOR g (energies unchanged)."""
    s = 1.0 - 2.0 * g
    h2 = s * (h + J @ g)
    J2 = J * np.outer(s, s)
    c2 = offset + float(h @ g) + 0.5 * float(g @ J @ g)
    return c2, h2, J2


def _run(
    mode: str,
    q: QuboModel,
    dfa: AvoidanceDfa,
    cfg: AnnealConfig,
    betas: np.ndarray,
    init: np.ndarray | None,
    depth: float | None = None,
    seed_offset: int = 0,
) -> AnnealReport:
    offset, h, J = q.arrays()
    n = q.num_vars
    g = np.zeros(n)
    if cfg.gauge:
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, _GAUGE_STREAM, seed_offset]))
        g = rng.integers(0, 2, size=n).astype(float)
        offset, h, J = _gauge(offset, h, J, g)
    start = np.zeros(n, dtype=np.int8) if init is None else (init.astype(np.int8) ^ g.astype(np.int8))
    out = np.zeros((cfg.reads, n), dtype=np.int8)
    anc_a, anc_b, dep_ptr, dep_idx = _dependency_arrays(q)
    _metropolis(
        h, J, start, init is None, betas.astype(np.float64), cfg.read_seeds(seed_offset),
        MOVES[cfg.moves], q.n_original, anc_a, anc_b, dep_ptr, dep_idx, g.astype(np.int8), out,
    )
    samples = out ^ g.astype(np.int8)

    xs = samples.astype(float)
    o, h0, J0 = q.arrays()
    energies = o + xs @ h0 + 0.5 * np.einsum("ri,ij,rj->r", xs, J0, xs)

    cache: dict[bytes, bool] = {}
    valid = np.zeros(cfg.reads, dtype=bool)
    for r in range(cfg.reads):
        key = samples[r, : q.n_original].tobytes()
        if key not in cache:
            cache[key] = dfa.accepts(Word.from_bits(samples[r, : q.n_original]))
        valid[r] = cache[key]
    found = sorted({Word.from_bits(samples[r, : q.n_original]) for r in np.flatnonzero(valid)})
    return AnnealReport(
        mode=mode,
        config=cfg,
        n_original=q.n_original,
        samples=samples,
        energies=energies,
        valid=valid,
        target_degeneracy=count_words(dfa, q.n_original),
        found=tuple(found),
        depth=depth,
        gauge_mask=tuple(int(v) for v in g) if cfg.gauge else None,
    )


def forward_anneal(q: QuboModel, cfg: AnnealConfig, dfa: AvoidanceDfa) -> AnnealReport:
    """Simulated annealing from uniform random states, validated by ``dfa``."""
    return _run("forward", q, dfa, cfg, cfg.forward_betas(), None)


def reverse_refine(
    q: QuboModel,
    start: Word,
    schedule: RefineSchedule,
    cfg: AnnealConfig,
    dfa: AvoidanceDfa,
    *,
    seed_offset: int = 0,
) -> AnnealReport:
    """Anneal every read from the lifted ``start`` through a temperature bump."""
    if len(start) != q.n_original:
        raise ValueError(f"start has length {len(start)}, model has {q.n_original} original variables")
    init = np.array(q.lift(start), dtype=np.int8)
    return _run("reverse", q, dfa, cfg, schedule.betas(cfg), init, depth=schedule.depth, seed_offset=seed_offset)


def distance_one_starts(dfa: AvoidanceDfa, N: int, count: int | None = None) -> list[Word]:
    """Invalid words one flip away from a valid word, evenly spread and deterministic."""
    pool = []
    for w in dfa.words(N):
        for i in range(N):
            v = w.flip([i])
            if not dfa.accepts(v):
                pool.append(v)
    pool = sorted(set(pool))
    if count is None or count >= len(pool):
        return pool
    step = len(pool) / count
    return [pool[int(k * step)] for k in range(count)]


def refine_from_starts(
    q: QuboModel,
    starts: Sequence[Word],
    schedule: RefineSchedule,
    cfg: AnnealConfig,
    dfa: AvoidanceDfa,
) -> list[AnnealReport]:
    """One reverse-refinement report per start; ``cfg.reads`` is split evenly."""
    if not starts:
        raise ValueError("no starts given")
    per = max(1, cfg.reads // len(starts))
    reports = []
    for k, s in enumerate(starts):
        sub = replace(cfg, reads=per)
        reports.append(reverse_refine(q, s, schedule, sub, dfa, seed_offset=k * per))
    return reports


@dataclass(frozen=True)
class SuccessSummary:
    reports: int
    total_reads: int
    median_success: float
    mean_success: float
    pooled_success: float
    success_variance: float
    distinct_found: int
    degeneracy: int
    coverage: float
    found: tuple[Word, ...]

    def to_json(self) -> dict:
        d = asdict(self)
        d["found"] = [w.letters for w in self.found]
        return d


def success_statistics(reports: Sequence[AnnealReport], degeneracy: int) -> SuccessSummary:
    """Aggregate success rates and the union of recovered ground states."""
    if not reports:
        raise ValueError("reports must be nonempty")
    rates = [r.success_rate for r in reports]
    union = sorted(set().union(*(r.found for r in reports)))
    total = sum(r.reads for r in reports)
    return SuccessSummary(
        reports=len(reports),
        total_reads=total,
        median_success=float(statistics.median(rates)),
        mean_success=float(statistics.fmean(rates)),
        pooled_success=sum(int(r.valid.sum()) for r in reports) / total,
        success_variance=float(statistics.pvariance(rates)) if len(rates) > 1 else 0.0,
        distinct_found=len(union),
        degeneracy=degeneracy,
        coverage=len(union) / degeneracy if degeneracy else 0.0,
        found=tuple(union),
    )


@dataclass(frozen=True)
class Instance:
    spec: HamiltonianSpec
    hobo: HoboPolynomial
    qubo: QuboModel
    dfa: AvoidanceDfa


def make_instance(K: int, N: int, R=8, couplings: str = "unit") -> Instance:
    spec = HamiltonianSpec.build(K, N, couplings)
    hobo = build_hobo(spec)
    return Instance(spec=spec, hobo=hobo, qubo=quadratize(hobo, R), dfa=spec.dfa())
