"""Growth constants, the entropy staircase and the K=4 closed form.

Floating-point work (Perron roots, entropies) uses numpy doubles.  The
closed form for the K=4 counts and the rounding scan use mpmath at a
caller-chosen number of decimal digits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import mpmath
import numpy as np

from .automata import AvoidanceDfa, rung_dfa

GOLDEN_RATIO = (1 + math.sqrt(5)) / 2


class PrecisionError(ValueError):
    """Requested working precision cannot certify the result."""


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class PerronEstimate:
    value: float
    iterations: int
    degenerate: bool = False

    def __float__(self) -> float:
        return self.value


def perron_root(dfa: AvoidanceDfa | np.ndarray, tolerance: float = 1e-12, max_iter: int = 1_000_000) -> PerronEstimate:
    """Spectral radius of a nonnegative matrix by power iteration.

    Iterates with A + I, which has the same Perron vector but no other
    eigenvalue of equal modulus, so periodic automata converge too.
    Stops once the eigen-residual |Ax - mu x| of the Rayleigh quotient mu
    falls below ``tolerance``.
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    A = dfa.adjacency if isinstance(dfa, AvoidanceDfa) else np.asarray(dfa)
    A = A.astype(float)
    if A.size == 0 or not A.any():
        return PerronEstimate(0.0, 0, degenerate=True)
    if (A < 0).any():
        raise ValueError("matrix must be nonnegative")

    n = A.shape[0]
    x = np.ones(n) / math.sqrt(n)
    for it in range(1, max_iter + 1):
        y = A @ x + x
        x = y / np.linalg.norm(y)
        Ax = A @ x
        estimate = float(x @ Ax)
        if np.linalg.norm(Ax - estimate * x) < tolerance:
            return PerronEstimate(estimate, it)
    raise ConvergenceError(f"power iteration did not converge in {max_iter} steps")


@dataclass(frozen=True)
class GrowthReport:
    """Growth constants and entropy gaps for rungs 3..K."""

    K: int
    lambdas: tuple[float, ...]
    entropies: tuple[float, ...]
    delta_h: tuple[float, ...]
    J: tuple[float, ...]
    base: float = 1.0
    proportionality: float = 1.0

    @property
    def rungs(self) -> list[int]:
        return list(range(3, self.K + 1))

    def to_json(self) -> dict:
        return {
            "K": self.rungs,
            "lambdas": list(self.lambdas),
            "entropies": list(self.entropies),
            "delta_h": list(self.delta_h),
            "J": list(self.J),
            "base": self.base,
            "proportionality": self.proportionality,
        }


def staircase(
    K_max: int,
    *,
    base: float = 1.0,
    proportionality: float | None = None,
    tolerance: float = 1e-12,
) -> GrowthReport:
    """Growth constants, entropies and energy scales up to rung ``K_max``.

    The J list is aligned with the forbidden set: J[0] = ``base`` for SS,
    then J[k-3] = proportionality * delta_h_k for k >= 4.  The default
    proportionality 1 / delta_h_4 makes the LLL coupling exactly 1.
    """
    if K_max < 3:
        raise ValueError("K_max must be >= 3")
    lambdas = [perron_root(rung_dfa(k), tolerance).value for k in range(3, K_max + 1)]
    entropies = [math.log(lam) for lam in lambdas]
    delta_h = [math.log(lambdas[i - 1] / lambdas[i]) for i in range(1, len(lambdas))]
    if proportionality is None:
        proportionality = 1.0 / delta_h[0] if delta_h else 1.0
    J = [base] + [proportionality * d for d in delta_h]
    return GrowthReport(
        K=K_max,
        lambdas=tuple(lambdas),
        entropies=tuple(entropies),
        delta_h=tuple(delta_h),
        J=tuple(J),
        base=base,
        proportionality=proportionality,
    )


def plastic_sequence(n_max: int) -> list[int]:
    """a_1..a_{n_max} for a_n = a_{n-1} + a_{n-2} - a_{n-4}, seeds 2, 3, 4, 5."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    a = [2, 3, 4, 5]
    while len(a) < n_max:
        a.append(a[-1] + a[-2] - a[-4])
    return a[:n_max]


@dataclass(frozen=True)
class PlasticClosedForm:
    """a_n = unit + C rho^n + B sigma^n + C' conj(sigma)^n at ``precision`` digits.

    ``unit`` is the fitted coefficient of the root x = 1 of (x-1)(x^3-x-1);
    it vanishes to working precision, so round(C rho^n) tracks a_n.
    """

    rho: mpmath.mpf
    C: mpmath.mpf
    sigma: mpmath.mpc
    sigma_bar: mpmath.mpc
    B: mpmath.mpc
    C_prime: mpmath.mpc
    unit: mpmath.mpc
    precision: int

    def term(self, n: int) -> mpmath.mpf:
        with mpmath.workdps(self.precision):
            val = self.unit + self.C * self.rho**n + self.B * self.sigma**n + self.C_prime * self.sigma_bar**n
            return mpmath.re(val)

    def residuals(self) -> dict[str, mpmath.mpf]:
        """Absolute residuals of the defining identities."""
        with mpmath.workdps(self.precision):
            r, c = self.rho, self.C
            return {
                "rho_cubic": abs(r**3 - r - 1),
                "C_cubic": abs(23 * c**3 - 46 * c**2 + 13 * c - 1),
                "sigma_modulus": abs(abs(self.sigma) * mpmath.sqrt(r) - 1),
                "conjugate_pair": abs(self.C_prime - mpmath.conj(self.B)),
                "unit": abs(self.unit),
            }

    def to_json(self, digits: int = 40) -> dict:
        def s(x):
            return mpmath.nstr(x, digits)

        return {
            "precision": self.precision,
            "rho": s(self.rho),
            "C": s(self.C),
            "sigma": s(self.sigma),
            "abs_sigma": s(abs(self.sigma)),
            "B": s(self.B),
            "C_prime": s(self.C_prime),
            "unit_coefficient": s(self.unit),
        }


def _newton(f, df, x0, digits: int, max_iter: int = 500):
    x = mpmath.mpf(x0)
    eps = mpmath.mpf(10) ** (-digits)
    for _ in range(max_iter):
        step = f(x) / df(x)
        x -= step
        if abs(step) < eps:
            return x
    raise PrecisionError("Newton iteration failed to converge")


def plastic_closed_form(precision_digits: int = 200) -> PlasticClosedForm:
    """Roots of (x-1)(x^3-x-1) and the fitted coefficients of the K=4 counts."""
    if precision_digits < 50:
        raise PrecisionError("precision_digits must be >= 50")
    with mpmath.workdps(precision_digits + 10):
        rho = _newton(lambda x: x**3 - x - 1, lambda x: 3 * x**2 - 1, "1.3", precision_digits + 5)
        # x^3 - x - 1 = (x - rho)(x^2 + rho x + rho^2 - 1)
        disc = 3 * rho**2 - 4
        sigma = mpmath.mpc(-rho / 2, mpmath.sqrt(disc) / 2)
        sigma_bar = mpmath.conj(sigma)
        if abs(sigma - sigma_bar) < mpmath.mpf(10) ** (-(precision_digits // 2)):
            raise PrecisionError("complex roots not separated at this precision")
        C = rho**7 / (3 * rho**2 - 1)
        a = plastic_sequence(3)
        M = mpmath.matrix([[1, sigma**n, sigma_bar**n] for n in (1, 2, 3)])
        rhs = mpmath.matrix([a[n - 1] - C * rho**n for n in (1, 2, 3)])
        unit, B, C_prime = mpmath.lu_solve(M, rhs)
    with mpmath.workdps(precision_digits):
        return PlasticClosedForm(
            rho=+rho,
            C=+C,
            sigma=+sigma,
            sigma_bar=+sigma_bar,
            B=+B,
            C_prime=+C_prime,
            unit=+unit,
            precision=precision_digits,
        )


@dataclass(frozen=True)
class RoundingScan:
    n_max: int
    precision: int
    first_failure: int | None
    max_abs_deviation: mpmath.mpf
    samples: dict[int, mpmath.mpf] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.first_failure is None

    def to_json(self, digits: int = 20) -> dict:
        return {
            "n_max": self.n_max,
            "precision": self.precision,
            "first_failure": self.first_failure,
            "passed": self.passed,
            "max_abs_deviation": mpmath.nstr(self.max_abs_deviation, digits),
            "E_samples": {str(n): mpmath.nstr(e, digits) for n, e in sorted(self.samples.items())},
        }


def required_digits(n_max: int, guard: int = 30) -> int:
    rho = 1.324717957244746
    return math.ceil(n_max * math.log10(rho)) + guard


def _sample_indices(n_max: int) -> list[int]:
    idx = set(range(1, min(n_max, 50) + 1))
    idx.update(range(100, n_max + 1, 100))
    idx.add(n_max)
    return sorted(idx)


def rounding_identity_scan(n_max: int, precision_digits: int = 200) -> RoundingScan:
    """Check round(C rho^n) == a_n for 1 <= n <= n_max.

    Samples E_n = a_n - 1 - C rho^n along the way; ``max_abs_deviation`` is
    max |a_n - C rho^n|, which must stay below 1/2 for the identity.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    need = required_digits(n_max)
    if precision_digits < need:
        raise PrecisionError(f"{precision_digits} digits < {need} required for n_max={n_max}")
    cf = plastic_closed_form(max(precision_digits, 50))
    a = plastic_sequence(n_max)
    wanted = set(_sample_indices(n_max))
    samples: dict[int, mpmath.mpf] = {}
    first_failure = None
    worst = mpmath.mpf(0)
    with mpmath.workdps(precision_digits):
        power = mpmath.mpf(1)
        for n in range(1, n_max + 1):
            power *= cf.rho
            approx = cf.C * power
            dev = a[n - 1] - approx
            worst = max(worst, abs(dev))
            if first_failure is None and int(mpmath.nint(approx)) != a[n - 1]:
                first_failure = n
            if n in wanted:
                samples[n] = dev - 1
    return RoundingScan(
        n_max=n_max,
        precision=precision_digits,
        first_failure=first_failure,
        max_abs_deviation=worst,
        samples=samples,
    )


def envelope_decay_rate(values: Sequence[float]) -> float:
    """Slope of log|v_n| against n over the local maxima of |v_n|.

    ``values[i]`` is taken as the term with index i + 1.
    """
    mags = [abs(float(v)) for v in values]
    peaks = [
        (i + 1, mags[i])
        for i in range(1, len(mags) - 1)
        if mags[i] >= mags[i - 1] and mags[i] >= mags[i + 1] and mags[i] > 0
    ]
    if len(peaks) < 2:
        raise ValueError("not enough local maxima to fit")
    xs = np.array([p[0] for p in peaks], dtype=float)
    ys = np.log([p[1] for p in peaks])
    slope, _ = np.polyfit(xs, ys, 1)
    return float(slope)
