"""Exact classical spectra of the forbidden-factor Hamiltonians.

Every projector in H_K is diagonal in the computational basis, so the
Hamiltonian is fully described by its energy on each bitstring: the
(weighted) number of windows that spell a forbidden factor.  "Exact
diagonalisation" here is enumeration of all 2^N strings.

Bitstrings are encoded big-endian: site 0 is the most significant bit.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from numbers import Real

import numpy as np

from .automata import AvoidanceDfa, count_words, prune_to_avoidance, build_ac
from .growth import staircase
from .words import Word, boundary_flip_mffs

DEFAULT_CAP = 20
_BLOCK = 1 << 18


class SizeError(ValueError):
    """System too large for exhaustive enumeration."""


@dataclass(frozen=True)
class HamiltonianSpec:
    """Open-chain H_K on N sites with one coupling per forbidden pattern."""

    K: int
    N: int
    patterns: tuple[Word, ...]
    couplings: tuple[Real, ...]

    def __post_init__(self) -> None:
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if len(self.patterns) != len(self.couplings):
            raise ValueError("one coupling per pattern required")
        if any(not J > 0 for J in self.couplings):
            raise ValueError("couplings must be positive")

    @classmethod
    def unit(cls, K: int, N: int) -> HamiltonianSpec:
        pats = boundary_flip_mffs(K).members
        return cls(K=K, N=N, patterns=pats, couplings=(1,) * len(pats))

    @classmethod
    def entropy_scaled(cls, K: int, N: int, base: float = 1.0, proportionality: float | None = None) -> HamiltonianSpec:
        """Couplings J_k proportional to log(lambda_{k-1} / lambda_k)."""
        pats = boundary_flip_mffs(K).members
        J = staircase(K, base=base, proportionality=proportionality).J
        return cls(K=K, N=N, patterns=pats, couplings=tuple(J))

    @classmethod
    def build(cls, K: int, N: int, couplings: str = "unit") -> HamiltonianSpec:
        if couplings == "unit":
            return cls.unit(K, N)
        if couplings == "entropy":
            return cls.entropy_scaled(K, N)
        raise ValueError(f"unknown coupling scheme {couplings!r}")

    @property
    def integer_couplings(self) -> bool:
        return all(float(J).is_integer() for J in self.couplings)

    def windows(self):
        """(pattern index, start site) for every window that fits the chain."""
        for k, M in enumerate(self.patterns):
            for i in range(self.N - len(M) + 1):
                yield k, i

    def dfa(self) -> AvoidanceDfa:
        return prune_to_avoidance(build_ac(self.patterns))


def energy(spec: HamiltonianSpec, x: Word):
    """Sum of J_M over every window of ``x`` equal to a pattern M."""
    if len(x) != spec.N:
        raise ValueError(f"word length {len(x)} != N = {spec.N}")
    s = x.letters
    total = 0
    for M, J in zip(spec.patterns, spec.couplings):
        m = M.letters
        hits = sum(1 for i in range(spec.N - len(m) + 1) if s.startswith(m, i))
        total += J * hits
    return total


def energies(spec: HamiltonianSpec, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Energies of the integer-encoded strings start..stop-1 (vectorised)."""
    N = spec.N
    stop = (1 << N) if stop is None else stop
    x = np.arange(start, stop, dtype=np.int64)
    dtype = np.int64 if spec.integer_couplings else np.float64
    E = np.zeros(x.shape, dtype=dtype)
    for M, J in zip(spec.patterns, spec.couplings):
        m = len(M)
        if m > N:
            continue
        mask = (1 << m) - 1
        target = M.to_int()
        hits = np.zeros(x.shape, dtype=np.int64)
        for i in range(N - m + 1):
            hits += ((x >> (N - i - m)) & mask) == target
        E += (int(J) if dtype is np.int64 else float(J)) * hits
    return E


@dataclass(frozen=True)
class SpectrumReport:
    N: int
    histogram: dict
    ground_energy: float
    degeneracy: int
    ground_states: tuple[Word, ...]
    gap: float | None

    def to_json(self, max_states: int | None = 1000) -> dict:
        states = self.ground_states if max_states is None else self.ground_states[:max_states]
        return {
            "N": self.N,
            "histogram": [[_num(e), c] for e, c in sorted(self.histogram.items())],
            "ground_energy": _num(self.ground_energy),
            "degeneracy": self.degeneracy,
            "gap": None if self.gap is None else _num(self.gap),
            "ground_states": [w.letters for w in states],
            "ground_states_truncated": len(states) < len(self.ground_states),
        }


def _num(v):
    v = v.item() if hasattr(v, "item") else v
    if isinstance(v, float) and v.is_integer():
        return int(v)
    return v


def full_spectrum(spec: HamiltonianSpec, cap: int = DEFAULT_CAP) -> SpectrumReport:
    """Histogram, ground space and gap over all 2^N configurations."""
    if spec.N > cap:
        raise SizeError(f"N={spec.N} exceeds enumeration cap {cap}; use count_words for ground-state counts")
    total = 1 << spec.N
    hist: Counter = Counter()
    ground_energy = None
    ground: list[int] = []
    for lo in range(0, total, _BLOCK):
        E = energies(spec, lo, min(total, lo + _BLOCK))
        vals, counts = np.unique(E, return_counts=True)
        hist.update({v.item(): int(c) for v, c in zip(vals, counts)})
        emin = E.min().item()
        if ground_energy is None or emin < ground_energy:
            ground_energy = emin
            ground = []
        if emin == ground_energy:
            ground.extend((np.flatnonzero(E == emin) + lo).tolist())
    levels = sorted(hist)
    gap = levels[1] - levels[0] if len(levels) > 1 else None
    return SpectrumReport(
        N=spec.N,
        histogram=dict(sorted(hist.items())),
        ground_energy=ground_energy,
        degeneracy=hist[ground_energy],
        ground_states=tuple(Word.from_int(v, spec.N) for v in ground),
        gap=gap,
    )


@dataclass(frozen=True)
class KernelReport:
    equal: bool
    kernel_size: int
    language_size: int
    counterexample: Word | None
    members: tuple[Word, ...]

    def to_json(self) -> dict:
        return {
            "equal": self.equal,
            "kernel_size": self.kernel_size,
            "language_size": self.language_size,
            "counterexample": None if self.counterexample is None else self.counterexample.letters,
        }


def kernel_equals_language(spec: HamiltonianSpec, cap: int = DEFAULT_CAP) -> KernelReport:
    """Compare the zero-energy set with the words generated by the avoidance DFA."""
    if spec.N > cap:
        raise SizeError(f"N={spec.N} exceeds enumeration cap {cap}")
    E = energies(spec)
    kernel = set(np.flatnonzero(E == 0).tolist())
    language = {w.to_int() for w in spec.dfa().words(spec.N)}
    diff = sorted(kernel ^ language)
    witness = Word.from_int(diff[0], spec.N) if diff else None
    return KernelReport(
        equal=not diff,
        kernel_size=len(kernel),
        language_size=len(language),
        counterexample=witness,
        members=tuple(Word.from_int(v, spec.N) for v in sorted(kernel)),
    )


def local_sector_rank(K: int, window: int = 3) -> tuple[int, list[Word]]:
    """Number and list of length-``window`` words valid at rung K."""
    if window < 1:
        raise ValueError("window must be >= 1")
    pats = [M.letters for M in boundary_flip_mffs(K).members if len(M) <= window]
    valid = []
    for v in range(1 << window):
        w = Word.from_int(v, window)
        if not any(p in w.letters for p in pats):
            valid.append(w)
    return len(valid), valid


def ground_degeneracy(spec: HamiltonianSpec) -> int:
    return count_words(spec.dfa(), spec.N)
