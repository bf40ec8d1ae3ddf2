"""Pseudo-Boolean form of H_K and its reduction to a QUBO.

Each window projector is the indicator that x_i..x_{i+m-1} spells the
pattern, i.e. a product of x (for S) and 1 - x (for L) factors.  Expanding
the products gives a multilinear polynomial of degree max |M|.  Degree is
then reduced with the Rosenberg substitution y = x_a x_b, enforced by the
penalty R (x_a x_b - 2 x_a y - 2 x_b y + 3 y), which is 0 when y = x_a x_b
and at least R otherwise.

Coefficients are kept as ``Fraction`` so the reduction itself is exact.
"""

from __future__ import annotations

import itertools
import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

from .spectra import HamiltonianSpec
from .words import Word

Term = tuple[int, ...]


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


def _fmt(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


@dataclass(frozen=True)
class HoboPolynomial:
    """Multilinear polynomial sum_T c_T prod_{i in T} x_i over {0,1}^n."""

    n: int
    terms: Mapping[Term, Fraction]

    def __post_init__(self) -> None:
        for t in self.terms:
            if len(set(t)) != len(t) or list(t) != sorted(t):
                raise ValueError(f"term {t} is not a sorted set of distinct variables")
            if t and not (0 <= t[0] and t[-1] < self.n):
                raise ValueError(f"term {t} references variables outside 0..{self.n - 1}")

    @property
    def degree(self) -> int:
        return max((len(t) for t in self.terms), default=0)

    @property
    def constant(self) -> Fraction:
        return self.terms.get((), Fraction(0))

    def evaluate(self, bits: Iterable[int]) -> Fraction:
        x = list(bits)
        if len(x) != self.n:
            raise ValueError(f"expected {self.n} bits, got {len(x)}")
        return sum((c for t, c in self.terms.items() if all(x[i] for i in t)), Fraction(0))

    def evaluate_batch(self, X: np.ndarray) -> np.ndarray:
        """Energies of the rows of a 0/1 matrix X (float unless all coefficients are integers)."""
        X = np.asarray(X, dtype=np.int64)
        integral = all(c.denominator == 1 for c in self.terms.values())
        out = np.zeros(X.shape[0], dtype=np.int64 if integral else np.float64)
        for t, c in self.terms.items():
            mono = np.ones(X.shape[0], dtype=np.int64)
            for i in t:
                mono &= X[:, i]
            out += (int(c) if integral else float(c)) * mono
        return out

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "degree": self.degree,
            "terms": [[list(t), _fmt(c)] for t, c in sorted(self.terms.items(), key=lambda kv: (len(kv[0]), kv[0]))],
        }


def _add(terms: dict[Term, Fraction], t: Term, c: Fraction) -> None:
    v = terms.get(t, Fraction(0)) + c
    if v:
        terms[t] = v
    else:
        terms.pop(t, None)


def build_hobo(spec: HamiltonianSpec) -> HoboPolynomial:
    """Expand every window indicator of H_K into multilinear monomials."""
    terms: dict[Term, Fraction] = {}
    for k, i in spec.windows():
        M = spec.patterns[k]
        J = _frac(spec.couplings[k])
        ones = [i + j for j, b in enumerate(M.bits) if b == 1]
        zeros = [i + j for j, b in enumerate(M.bits) if b == 0]
        # prod_{p in ones} x_p prod_{q in zeros} (1 - x_q) = sum_{T <= zeros} (-1)^|T| x_{ones + T}
        for r in range(len(zeros) + 1):
            sign = -1 if r % 2 else 1
            for extra in itertools.combinations(zeros, r):
                _add(terms, tuple(sorted(ones + list(extra))), sign * J)
    return HoboPolynomial(n=spec.N, terms=terms)


@dataclass(frozen=True)
class Ancilla:
    var: int
    a: int
    b: int


@dataclass(frozen=True)
class QuboModel:
    """offset + sum_i h_i x_i + sum_{i<j} Q_ij x_i x_j with ancilla bookkeeping.

    Variables 0..n_original-1 are the chain sites; ancilla ``var`` stands
    for the product of variables ``a`` and ``b`` (either may be an ancilla).
    """

    n_original: int
    num_vars: int
    offset: Fraction
    linear: Mapping[int, Fraction]
    quadratic: Mapping[tuple[int, int], Fraction]
    ancillas: tuple[Ancilla, ...] = ()
    R: Fraction = Fraction(0)

    @property
    def num_ancillas(self) -> int:
        return len(self.ancillas)

    @property
    def integral(self) -> bool:
        coeffs = itertools.chain([self.offset], self.linear.values(), self.quadratic.values())
        return all(c.denominator == 1 for c in coeffs)

    def energy(self, bits: Iterable[int]) -> Fraction:
        x = list(bits)
        if len(x) != self.num_vars:
            raise ValueError(f"expected {self.num_vars} bits, got {len(x)}")
        e = self.offset
        e += sum((c for i, c in self.linear.items() if x[i]), Fraction(0))
        e += sum((c for (i, j), c in self.quadratic.items() if x[i] and x[j]), Fraction(0))
        return e

    def lift(self, original: Iterable[int] | Word) -> tuple[int, ...]:
        """Complete an original assignment with consistent ancilla values."""
        x = list(original.bits if isinstance(original, Word) else original)
        if len(x) != self.n_original:
            raise ValueError(f"expected {self.n_original} original bits, got {len(x)}")
        x.extend([0] * self.num_ancillas)
        for anc in self.ancillas:
            x[anc.var] = x[anc.a] & x[anc.b]
        return tuple(x)

    def arrays(self) -> tuple[float, np.ndarray, np.ndarray]:
        """(offset, linear vector, symmetric coupling matrix with zero diagonal) as floats."""
        h = np.zeros(self.num_vars)
        J = np.zeros((self.num_vars, self.num_vars))
        for i, c in self.linear.items():
            h[i] = float(c)
        for (i, j), c in self.quadratic.items():
            J[i, j] = J[j, i] = float(c)
        return float(self.offset), h, J

    def to_coo(self) -> str:
        """Coordinate text: header with counts and offset, then ``i j coeff`` rows."""
        lines = [f"{self.num_vars} {self.n_original} {len(self.linear)} {len(self.quadratic)} {_fmt(self.offset)}"]
        for i in sorted(self.linear):
            lines.append(f"{i} {i} {_fmt(self.linear[i])}")
        for i, j in sorted(self.quadratic):
            lines.append(f"{i} {j} {_fmt(self.quadratic[i, j])}")
        return "\n".join(lines) + "\n"

    def sidecar(self) -> dict:
        return {
            "n_original": self.n_original,
            "num_vars": self.num_vars,
            "R": _fmt(self.R),
            "ancillas": {str(a.var): [a.a, a.b] for a in self.ancillas},
        }

    @classmethod
    def from_coo(cls, text: str, sidecar: Mapping | None = None) -> QuboModel:
        rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        num_vars, n_original, n_lin, n_quad = (int(v) for v in rows[0][:4])
        offset = Fraction(rows[0][4])
        linear: dict[int, Fraction] = {}
        quadratic: dict[tuple[int, int], Fraction] = {}
        for i, j, c in rows[1:]:
            i, j = int(i), int(j)
            if i == j:
                linear[i] = linear.get(i, Fraction(0)) + Fraction(c)
            else:
                key = (min(i, j), max(i, j))
                quadratic[key] = quadratic.get(key, Fraction(0)) + Fraction(c)
        if len(linear) != n_lin or len(quadratic) != n_quad:
            raise ValueError("row counts do not match header")
        ancillas: tuple[Ancilla, ...] = ()
        R = Fraction(0)
        if sidecar is not None:
            ancillas = tuple(
                Ancilla(int(y), int(ab[0]), int(ab[1]))
                for y, ab in sorted(sidecar["ancillas"].items(), key=lambda kv: int(kv[0]))
            )
            R = Fraction(sidecar["R"])
        return cls(n_original, num_vars, offset, linear, quadratic, ancillas, R)


def quadratize(h: HoboPolynomial, R) -> QuboModel:
    """Reduce ``h`` to degree two with Rosenberg ancillas of strength ``R``.

    The pair occurring in the most terms of degree > 2 is substituted
    first; ties go to the lexicographically smallest pair.
    """
    R = _frac(R)
    if R <= 0:
        raise ValueError("reduction strength R must be positive")
    terms = dict(h.terms)
    ancillas: list[Ancilla] = []
    nxt = h.n
    while True:
        high = [t for t in terms if len(t) > 2]
        if not high:
            break
        freq = Counter(p for t in high for p in itertools.combinations(t, 2))
        (a, b), _ = min(freq.items(), key=lambda kv: (-kv[1], kv[0]))
        y = nxt
        nxt += 1
        ancillas.append(Ancilla(y, a, b))
        for t in high:
            if a in t and b in t:
                c = terms.pop(t)
                _add(terms, tuple(v for v in t if v not in (a, b)) + (y,), c)
        _add(terms, (a, b), R)
        _add(terms, (a, y), -2 * R)
        _add(terms, (b, y), -2 * R)
        _add(terms, (y,), 3 * R)

    linear = {t[0]: c for t, c in terms.items() if len(t) == 1}
    quadratic = {(t[0], t[1]): c for t, c in terms.items() if len(t) == 2}
    return QuboModel(
        n_original=h.n,
        num_vars=nxt,
        offset=terms.get((), Fraction(0)),
        linear=dict(sorted(linear.items())),
        quadratic=dict(sorted(quadratic.items())),
        ancillas=tuple(ancillas),
        R=R,
    )


def rosenberg_penalty(a: int, b: int, y: int, R=1) -> Fraction:
    return _frac(R) * (a * b - 2 * a * y - 2 * b * y + 3 * y)


def gadget_truth_table(R) -> list[tuple[int, int, int, Fraction, bool]]:
    """Rows (a, b, y, penalty, consistent) of the substitution penalty."""
    return [
        (a, b, y, rosenberg_penalty(a, b, y, R), y == a * b)
        for a, b, y in itertools.product((0, 1), repeat=3)
    ]


def gadget_sound(R) -> bool:
    """Consistent rows cost 0; inconsistent rows cost at least R."""
    R = _frac(R)
    return all((p == 0) if ok else (p >= R) for *_, p, ok in gadget_truth_table(R))


def all_assignments(n: int) -> np.ndarray:
    """All 2^n assignments as rows, big-endian (variable 0 most significant)."""
    v = np.arange(1 << n, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((v[:, None] >> shifts) & 1).astype(np.int64)


def _elimination_order(k: int, edges: set[tuple[int, int]]) -> list[int]:
    nbrs: dict[int, set[int]] = {v: set() for v in range(k)}
    for i, j in edges:
        nbrs[i].add(j)
        nbrs[j].add(i)
    order = []
    remaining = set(range(k))
    while remaining:
        v = min(remaining, key=lambda u: (len(nbrs[u]), u))
        order.append(v)
        for u in nbrs[v]:
            nbrs[u] |= nbrs[v] - {u}
            nbrs[u].discard(v)
        remaining.discard(v)
        del nbrs[v]
    return order


def ancilla_minimized_energies(q: QuboModel, X: np.ndarray) -> np.ndarray:
    """min over ancillas of the QUBO energy, for each original assignment row of X.

    Exact bucket elimination over the ancillas, vectorised across rows.
    """
    X = np.asarray(X, dtype=np.int64)
    n0, k = q.n_original, q.num_ancillas
    integral = q.integral
    dtype = np.int64 if integral else np.float64
    conv = int if integral else float
    B = X.shape[0]

    base = np.full(B, conv(q.offset), dtype=dtype)
    unary = np.zeros((B, k), dtype=dtype)
    pair: dict[tuple[int, int], object] = {}
    for i, c in q.linear.items():
        if i < n0:
            base += conv(c) * X[:, i]
        else:
            unary[:, i - n0] += conv(c)
    for (i, j), c in q.quadratic.items():
        if j < n0:
            base += conv(c) * (X[:, i] & X[:, j])
        elif i < n0:
            unary[:, j - n0] += conv(c) * X[:, i]
        else:
            pair[(i - n0, j - n0)] = conv(c)

    # factor = (sorted scope, table of shape (B or 1,) + (2,) * len(scope))
    factors: list[tuple[tuple[int, ...], np.ndarray]] = []
    for v in range(k):
        t = np.zeros((B, 2), dtype=dtype)
        t[:, 1] = unary[:, v]
        factors.append(((v,), t))
    for (i, j), c in pair.items():
        t = np.zeros((1, 2, 2), dtype=dtype)
        t[0, 1, 1] = c
        factors.append(((i, j), t))

    for v in _elimination_order(k, set(pair)):
        touching = [f for f in factors if v in f[0]]
        factors = [f for f in factors if v not in f[0]]
        scope = tuple(sorted(set().union(*(s for s, _ in touching))))
        total = None
        for s, t in touching:
            shape = (t.shape[0],) + tuple(2 if u in s else 1 for u in scope)
            expanded = t.reshape(shape)
            total = expanded if total is None else total + expanded
        reduced = total.min(axis=1 + scope.index(v))
        factors.append((tuple(u for u in scope if u != v), reduced))

    out = base.copy()
    for s, t in factors:
        out = out + t.reshape(t.shape[0])
    return out


@dataclass(frozen=True)
class ReductionVerdict:
    mode: str
    R: Fraction
    pointwise_exact: bool
    minima_exact: bool
    hobo_min: float | None
    qubo_min: float | None
    hobo_minimizers: int | None
    qubo_minimizers: int | None
    checked: int
    witness: Word | None = None

    @property
    def exact(self) -> bool:
        return self.minima_exact

    def to_json(self) -> dict:
        def num(v):
            if v is None:
                return None
            v = v.item() if hasattr(v, "item") else v
            return int(v) if float(v).is_integer() else float(v)

        return {
            "mode": self.mode,
            "R": _fmt(self.R),
            "pointwise_exact": self.pointwise_exact,
            "minima_exact": self.minima_exact,
            "hobo_min": num(self.hobo_min),
            "qubo_min": num(self.qubo_min),
            "hobo_minimizers": self.hobo_minimizers,
            "qubo_minimizers": self.qubo_minimizers,
            "checked": self.checked,
            "witness": None if self.witness is None else self.witness.letters,
        }


def _equal(a: np.ndarray, b) -> np.ndarray:
    if a.dtype.kind == "i" and np.asarray(b).dtype.kind == "i":
        return a == b
    return np.isclose(a, b, rtol=0, atol=1e-9)


def verify_reduction(
    h: HoboPolynomial,
    q: QuboModel,
    *,
    exhaustive_cap: int = 20,
    samples: int = 4096,
    seed: int = 0,
) -> ReductionVerdict:
    """Check that minimising out the ancillas reproduces the HOBO.

    Exhaustive mode covers every original assignment and also checks that
    the global QUBO minimisers project exactly onto the HOBO minimisers.
    Above ``exhaustive_cap`` original variables only a seeded random sample
    is checked pointwise and the verdict is labelled "sampled".
    """
    if h.n != q.n_original:
        raise ValueError("HOBO and QUBO disagree on the number of original variables")
    if h.n <= exhaustive_cap:
        X = all_assignments(h.n)
        mode = "exhaustive"
    else:
        rng = np.random.default_rng(seed)
        X = rng.integers(0, 2, size=(samples, h.n), dtype=np.int64)
        mode = "sampled"
    hobo = h.evaluate_batch(X)
    g = ancilla_minimized_energies(q, X)
    same = _equal(g, hobo)
    pointwise = bool(same.all())
    witness_row = None if pointwise else int(np.flatnonzero(~same)[0])

    if mode == "sampled":
        return ReductionVerdict(
            mode=mode, R=q.R, pointwise_exact=pointwise, minima_exact=pointwise,
            hobo_min=None, qubo_min=None, hobo_minimizers=None, qubo_minimizers=None,
            checked=X.shape[0],
            witness=None if witness_row is None else Word.from_bits(X[witness_row]),
        )

    hmin, gmin = hobo.min(), g.min()
    h_arg = _equal(hobo, hmin)
    g_arg = _equal(g, gmin)
    minima = bool(_equal(np.array([gmin]), hmin)[0] and (h_arg == g_arg).all())
    if not minima:
        # prefer a spurious QUBO minimiser over a lost HOBO minimiser
        spurious = np.flatnonzero(g_arg & ~h_arg)
        lost = np.flatnonzero(h_arg & ~g_arg)
        witness_row = int(spurious[0]) if spurious.size else int(lost[0]) if lost.size else int(np.argmin(g))
    return ReductionVerdict(
        mode=mode,
        R=q.R,
        pointwise_exact=pointwise,
        minima_exact=minima,
        hobo_min=hmin.item(),
        qubo_min=gmin.item(),
        hobo_minimizers=int(h_arg.sum()),
        qubo_minimizers=int(g_arg.sum()),
        checked=X.shape[0],
        witness=None if witness_row is None else Word.from_bits(X[witness_row]),
    )


@dataclass(frozen=True)
class ThresholdEstimate:
    R: Fraction
    below: Fraction
    verdict: ReductionVerdict
    steps: int = field(default=0)

    def to_json(self) -> dict:
        return {"R": _fmt(self.R), "largest_failing": _fmt(self.below), "steps": self.steps,
                "verdict": self.verdict.to_json()}


def reduction_threshold(
    h: HoboPolynomial,
    *,
    low=0,
    high=None,
    resolution=Fraction(1, 64),
    exhaustive_cap: int = 20,
) -> ThresholdEstimate:
    """Smallest tested R (to ``resolution``) whose reduction has exact minima.

    ``low`` is assumed to fail; ``high`` defaults to doubling from 1 until
    the reduction is exact.
    """
    def ok(R: Fraction) -> ReductionVerdict:
        return verify_reduction(h, quadratize(h, R), exhaustive_cap=exhaustive_cap)

    lo = _frac(low)
    steps = 0
    if h.degree <= 2:
        return ThresholdEstimate(R=Fraction(0), below=Fraction(0), verdict=ok(Fraction(1)), steps=0)
    if high is None:
        hi = Fraction(1)
        v = ok(hi)
        while not v.exact:
            lo, hi = hi, hi * 2
            v = ok(hi)
            steps += 1
            if hi > 1 << 30:
                raise RuntimeError("no exact reduction found below R = 2^30")
    else:
        hi = _frac(high)
        v = ok(hi)
        if not v.exact:
            raise ValueError(f"reduction is not exact at high = {hi}")
    resolution = _frac(resolution)
    while hi - lo > resolution:
        mid = (lo + hi) / 2
        steps += 1
        vm = ok(mid)
        if vm.exact:
            hi, v = mid, vm
        else:
            lo = mid
    return ThresholdEstimate(R=hi, below=lo, verdict=v, steps=steps)


def hobo_summary(h: HoboPolynomial, q: QuboModel | None = None) -> dict:
    by_degree: dict[int, int] = defaultdict(int)
    for t in h.terms:
        by_degree[len(t)] += 1
    out = {"n": h.n, "degree": h.degree, "terms_by_degree": {str(d): c for d, c in sorted(by_degree.items())}}
    if q is not None:
        out.update({
            "R": _fmt(q.R),
            "num_vars": q.num_vars,
            "num_ancillas": q.num_ancillas,
            "num_linear": len(q.linear),
            "num_quadratic": len(q.quadratic),
            "ancillas": [[a.var, a.a, a.b] for a in q.ancillas],
        })
    return out


def dumps_sidecar(q: QuboModel) -> str:
    return json.dumps(q.sidecar(), sort_keys=True, indent=2)
