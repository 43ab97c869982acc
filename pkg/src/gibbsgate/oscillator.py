"""Harmonic-oscillator environments and the three-mode refutation.

Coupling a passive state to three oscillators with frequencies
``w1 = E_n - E_0``, ``w2 = E_m - E_0`` and ``w3 = q*w2 - p*w1`` forces the
environment populations to obey

    p[j+1, k, l] = p[j, k, l] * exp(-beta_n * w1)
    p[j, k+1, l] = p[j, k, l] * exp(-beta_m * w2)
    p[j+p, k, l+1] = p[j, k+q, l]

so that ``p[0, 0, l] = p[0, 0, 0] * s**l`` with
``log s = beta_n*p*w1 - beta_m*q*w2``. Whenever ``beta_n > beta_m`` a choice
of (p, q) makes ``log s > 0``, and the environment state cannot be
normalized.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .energy import NEG_INF, POS_INF, UNIT_BASIS, Basis, Energy, as_energy, format_rational, is_neg_inf, ratio
from .errors import InvalidInput, NumericError, UnsupportedAttackPair
from .spectrum import (
    DEFAULT_TOL,
    Level,
    LogState,
    PassivityViolation,
    Spectrum,
    beta_profile,
    beta_to_json,
    betas_equal,
    check_passivity,
)


def _positive_energy(omega, basis: Basis | None, field: str) -> Energy:
    e = as_energy(omega, basis)
    try:
        positive = e > 0
    except ValueError as exc:
        raise InvalidInput(str(exc), field) from None
    if not positive:
        raise InvalidInput("frequency must be numerically positive", field)
    return e


def oscillator_spectrum(omega, levels: int, basis: Basis | None = None) -> Spectrum:
    """Single-mode ladder omega*(n + 1/2) for n < levels."""
    basis = basis or (omega.basis if isinstance(omega, Energy) and omega.basis else UNIT_BASIS)
    omega = _positive_energy(omega, basis, "omega")
    if levels < 1:
        raise InvalidInput("need at least one level", "levels")
    half = Fraction(1, 2)
    return Spectrum(
        tuple(Level(omega * (n + half)) for n in range(levels)),
        basis,
        {"family": "oscillator", "omega": omega.to_json(), "levels": levels},
    )


@dataclass(frozen=True)
class MultimodeSpectrum:
    """Product of 1-3 oscillator ladders, indexed by occupation tuples.

    ``indices[i]`` and ``energies[i]`` describe flat level ``i``; tuples run
    over the full box of truncations in lexicographic order.
    """

    frequencies: tuple[Energy, ...]
    truncations: tuple[int, ...]
    basis: Basis
    indices: tuple[tuple[int, ...], ...] = field(repr=False)
    energies: tuple[Energy, ...] = field(repr=False)

    @property
    def modes(self) -> int:
        return len(self.frequencies)

    def __len__(self) -> int:
        return len(self.indices)

    def flat_index(self, idx: Sequence[int]) -> int | None:
        flat = 0
        for i, t in zip(idx, self.truncations):
            if not 0 <= i < t:
                return None
            flat = flat * t + i
        return flat

    def levels(self) -> list[tuple[int, Energy]]:
        return list(enumerate(self.energies))

    def spectrum(self) -> Spectrum:
        """Merged view: degenerate tuples share one level."""
        return Spectrum.from_energies(self.energies, self.basis, {"family": "multimode"})


def multimode_spectrum(freqs: Sequence, truncs: Sequence[int], basis: Basis | None = None) -> MultimodeSpectrum:
    if not freqs:
        raise InvalidInput("need at least one frequency", "freqs")
    if not 1 <= len(freqs) <= 3:
        raise InvalidInput("between one and three modes are supported", "freqs")
    if len(truncs) != len(freqs):
        raise InvalidInput("one truncation per mode", "truncs")
    if basis is None:
        basis = next((f.basis for f in freqs if isinstance(f, Energy) and f.basis is not None), UNIT_BASIS)
    omegas = tuple(_positive_energy(f, basis, f"freqs[{i}]") for i, f in enumerate(freqs))
    if any(t < 1 for t in truncs):
        raise InvalidInput("truncations must be positive", "truncs")
    half = Fraction(1, 2)
    zero_point = sum((w * half for w in omegas), Energy((), basis))
    indices = tuple(itertools.product(*(range(t) for t in truncs)))
    energies = tuple(
        zero_point + sum((w * n for w, n in zip(omegas, idx) if n), Energy((), basis)) for idx in indices
    )
    return MultimodeSpectrum(omegas, tuple(truncs), basis, indices, energies)


# --------------------------------------------------------------------------
# Choosing p and q


def simplest_between(lo: Fraction, hi: Fraction | None) -> Fraction:
    """Stern-Brocot search for the simplest rational in the open interval (lo, hi).

    ``lo >= 0``; ``hi is None`` means +infinity. The result has the smallest
    denominator of any rational in the interval, and the smallest numerator
    among those.
    """
    if lo < 0 or (hi is not None and hi <= lo):
        raise ValueError(f"bad interval ({lo}, {hi})")
    n = math.floor(lo) + 1
    if hi is None or n < hi:
        return Fraction(n)
    a = n - 1
    # no integer inside: write x = a + 1/y and recurse on the reciprocal interval
    y = simplest_between(1 / (hi - a), None if lo == a else 1 / (lo - a))
    return a + 1 / y


def choose_pq(omega1, omega2, beta_n, beta_m) -> tuple[int, int] | None:
    """Smallest (p, q) with w1/w2 < q/p < (beta_n/beta_m) * w1/w2, or None.

    None means the interval is empty (beta_n == beta_m), so the pair cannot
    be attacked.
    """
    beta_n, beta_m = Fraction(beta_n), Fraction(beta_m)
    if beta_m <= 0:
        raise InvalidInput("inverse temperatures must be positive", "beta_m")
    if beta_n < beta_m:
        raise InvalidInput("order the pair so that beta_n >= beta_m", "beta_n")
    if beta_n == beta_m:
        return None
    w1, w2 = as_energy(omega1), as_energy(omega2)
    r = ratio(w1, w2)
    if r is None:
        raise UnsupportedAttackPair(f"frequency ratio {w1!r} / {w2!r} is irrational")
    if r <= 0:
        raise InvalidInput("frequencies must be positive", "omega")
    x = simplest_between(r, r * beta_n / beta_m)
    return x.denominator, x.numerator


# --------------------------------------------------------------------------
# Certificates


@dataclass(frozen=True)
class GibbsCertificate:
    beta: Fraction | float

    def to_json(self) -> dict:
        return {"type": "gibbs", "beta": beta_to_json(self.beta)}


@dataclass(frozen=True)
class StructureViolation:
    n: int
    m: int
    reason: str

    def to_json(self) -> dict:
        return {"type": "structure_violation", "pair": [self.n, self.m], "reason": self.reason}


@dataclass(frozen=True)
class PairConsistent:
    n: int
    m: int
    beta: Fraction | float


@dataclass(frozen=True)
class InstabilityCertificate:
    """Exact witness that no normalizable three-mode environment state exists."""

    n: int
    m: int
    beta_n: Fraction
    beta_m: Fraction
    p: int
    q: int
    omega1: Energy
    omega2: Energy
    omega3: Energy
    log_s: Energy

    @property
    def pair(self) -> tuple[int, int]:
        return self.n, self.m

    @property
    def witness(self) -> str:
        return (
            f"p[j+1,k,l] = p[j,k,l]*exp(-{self.beta_n}*w1); "
            f"p[j,k+1,l] = p[j,k,l]*exp(-{self.beta_m}*w2); "
            f"p[j+{self.p},k,l+1] = p[j,k+{self.q},l]; "
            f"hence p[0,0,l] = p[0,0,0]*s^l with log s = {_energy_text(self.log_s)} > 0"
        )

    def recheck(self) -> list[str]:
        """Exact re-verification; returns the failed conditions (empty if sound)."""
        problems = []
        if math.gcd(self.p, self.q) != 1 or self.p < 1 or self.q < 1:
            problems.append("p, q must be coprime positive integers")
        if self.omega3 != self.omega2 * self.q - self.omega1 * self.p:
            problems.append("omega3 != q*omega2 - p*omega1")
        if not self.omega3 > 0:
            problems.append("omega3 must be positive")
        if self.log_s != self.omega1 * (self.beta_n * self.p) - self.omega2 * (self.beta_m * self.q):
            problems.append("log_s != beta_n*p*omega1 - beta_m*q*omega2")
        if not self.log_s > 0:
            problems.append("log_s must be positive")
        if not self.beta_n > self.beta_m:
            problems.append("beta_n must exceed beta_m")
        return problems

    def to_json(self) -> dict:
        return {
            "type": "instability",
            "pair": [self.n, self.m],
            "beta_n": format_rational(self.beta_n),
            "beta_m": format_rational(self.beta_m),
            "p": self.p,
            "q": self.q,
            "omega1": self.omega1.to_json(),
            "omega2": self.omega2.to_json(),
            "omega3": self.omega3.to_json(),
            "log_s": _energy_json(self.log_s),
            "witness": self.witness,
        }


@dataclass(frozen=True)
class VanishingCertificate:
    """Level n has zero population while level m does not.

    The mode-1 recursion kills every environment level with j >= 1, and the
    third recursion then carries those zeros onto every remaining level, so
    no environment state survives.
    """

    n: int
    m: int
    beta_m: Fraction
    p: int
    q: int
    omega1: Energy
    omega2: Energy
    omega3: Energy

    def recheck(self) -> list[str]:
        problems = []
        if math.gcd(self.p, self.q) != 1 or self.p < 1 or self.q < 1:
            problems.append("p, q must be coprime positive integers")
        if self.omega3 != self.omega2 * self.q - self.omega1 * self.p or not self.omega3 > 0:
            problems.append("omega3 must equal q*omega2 - p*omega1 and be positive")
        return problems

    def to_json(self) -> dict:
        return {
            "type": "vanishing",
            "pair": [self.n, self.m],
            "beta_n": "inf",
            "beta_m": beta_to_json(self.beta_m),
            "p": self.p,
            "q": self.q,
            "omega1": self.omega1.to_json(),
            "omega2": self.omega2.to_json(),
            "omega3": self.omega3.to_json(),
            "witness": "every environment population is forced to zero",
        }


@dataclass(frozen=True)
class ApproximateInstability:
    """A pair with irrational gap ratio whose numeric betas differ."""

    n: int
    m: int
    beta_n: float
    beta_m: float
    p: int
    q: int
    omega3: Energy
    log_s: float
    engine_verdict: dict | None = None

    def to_json(self) -> dict:
        out = {
            "type": "approximate_instability",
            "pair": [self.n, self.m],
            "beta_n": repr(float(self.beta_n)),
            "beta_m": repr(float(self.beta_m)),
            "p": self.p,
            "q": self.q,
            "omega3": self.omega3.to_json(),
            "log_s": repr(self.log_s),
        }
        if self.engine_verdict is not None:
            out["engine_verdict"] = self.engine_verdict
        return out


def _energy_json(e: Energy):
    return format_rational(e.rational) if e.is_rational else e.to_json()


def _energy_text(e: Energy) -> str:
    return format_rational(e.rational) if e.is_rational else repr(e)


# --------------------------------------------------------------------------
# Attacks


def _excited(spec: Spectrum, n: int, name: str):
    if not 1 <= n < len(spec):
        raise InvalidInput(f"level {n} is not an excited level", name)


def attack_pair(spec: Spectrum, state: LogState, n: int, m: int) -> InstabilityCertificate | PairConsistent:
    """Run the three-mode argument on levels n and m."""
    _excited(spec, n, "n")
    _excited(spec, m, "m")
    if n == m:
        raise InvalidInput("attack needs two distinct levels", "m")
    profile = beta_profile(state, spec)
    bn, bm = profile.betas[n], profile.betas[m]
    if isinstance(bn, float) or isinstance(bm, float):
        if math.isinf(bn) or math.isinf(bm):
            raise InvalidInput("infinite beta: use the zero-temperature branch", "logp")
        raise UnsupportedAttackPair("beta is only known numerically for this pair")
    if bn < bm:
        n, m, bn, bm = m, n, bm, bn
    if bn == bm:
        return PairConsistent(n, m, bn)
    w1, w2 = spec.gap(n), spec.gap(m)
    p, q = choose_pq(w1, w2, bn, bm)
    w3 = w2 * q - w1 * p
    log_s = w1 * (bn * p) - w2 * (bm * q)
    return InstabilityCertificate(n, m, bn, bm, p, q, w1, w2, w3, log_s)


def _vanishing_pair(spec: Spectrum, profile, n: int, m: int) -> VanishingCertificate:
    w1, w2 = spec.gap(n), spec.gap(m)
    r = ratio(w1, w2)
    if r is None:
        # any q/p above the ratio works; a numeric bound suffices
        r = Fraction(float(w1) / float(w2)).limit_denominator(10**9)
    x = simplest_between(r, None)
    if not w2 * x.numerator - w1 * x.denominator > 0:
        x = simplest_between(x, None)
    p, q = x.denominator, x.numerator
    return VanishingCertificate(n, m, profile.betas[m], p, q, w1, w2, w2 * q - w1 * p)


def _approximate_attack(spec: Spectrum, n: int, m: int, bn: float, bm: float):
    if bn < bm:
        n, m, bn, bm = m, n, bm, bn
    w1, w2 = spec.gap(n), spec.gap(m)
    r = float(w1) / float(w2)
    lo = Fraction(r).limit_denominator(10**9)
    hi = Fraction(r * bn / bm).limit_denominator(10**9)
    x = simplest_between(lo, hi) if lo < hi else None
    if x is None:
        return None
    p, q = x.denominator, x.numerator
    w3 = w2 * q - w1 * p
    log_s = bn * p * float(w1) - bm * q * float(w2)
    if not (w3 > 0 and log_s > 0):
        return None
    return ApproximateInstability(n, m, bn, bm, p, q, w3, log_s)


def refute_gibbs(spec: Spectrum, state: LogState, tol: float = DEFAULT_TOL):
    """Return a Gibbs certificate or the first witness that the state is not Gibbs.

    Level pairs are scanned by increasing gap of the higher level, then by
    the index of the lower one.
    """
    passivity = check_passivity(state, spec)
    if isinstance(passivity, PassivityViolation):
        return StructureViolation(passivity.n, passivity.m, passivity.reason)
    state = state.bound(spec.basis)
    if state.support == (0,):
        return GibbsCertificate(POS_INF)
    profile = beta_profile(state, spec, tol)
    approximate = None
    mismatch = None
    for j in range(2, len(spec)):
        for i in range(1, j):
            bi, bj = profile.betas[i], profile.betas[j]
            exact = profile.is_exact(i) and profile.is_exact(j)
            if betas_equal(bi, bj, tol, exact):
                continue
            mismatch = mismatch or (i, j)
            try:
                if isinstance(bj, float) and math.isinf(bj):
                    return _vanishing_pair(spec, profile, j, i)
                if exact:
                    return attack_pair(spec, state, i, j)
            except UnsupportedAttackPair:
                pass
            if approximate is None and not math.isinf(bj):
                approximate = _approximate_attack(spec, i, j, float(bi), float(bj))
    if approximate is not None:
        return approximate
    if mismatch is not None:
        raise NumericError(f"levels {mismatch} have different betas but no certificate could be built")
    return GibbsCertificate(profile.betas[1])


# --------------------------------------------------------------------------
# Environments for cross-checking a certificate


def attack_environment(cert: InstabilityCertificate, truncations: Sequence[int] | None = None):
    """Three-level system and three-mode environment realizing the certificate.

    The two attacked gaps are lifted to independent formal generators, so the
    only coincidences in the joint spectrum are the ones the recursion uses.
    With commensurable gaps the real environment has further coincidences,
    which can only add constraints.

    Returns ``(system spectrum, system state, environment)``; the system is
    ordered by energy and carries the populations of levels 0, n and m.
    """
    w1v, w2v = float(cert.omega1), float(cert.omega2)
    basis = Basis(("unit", "w1", "w2"), (1.0, w1v, w2v))
    g1, g2 = basis.gen("w1"), basis.gen("w2")
    truncations = tuple(truncations or (cert.p + 2, cert.q + 2, 3))
    env = multimode_spectrum([g1, g2, g2 * cert.q - g1 * cert.p], truncations, basis)
    return g1, g2, env


def lifted_system(cert: InstabilityCertificate, truncations: Sequence[int] | None = None):
    """Levels 0, n, m on the generic basis of :func:`attack_environment`.

    The populations are rebuilt from the exact betas, ``log p_n - log p_0 = -beta_n * w1``,
    which keeps them in the lifted coordinates.
    """
    g1, g2, env = attack_environment(cert, truncations)
    entries = [(Energy((), env.basis), Energy((), env.basis)), (g1, g1 * -cert.beta_n), (g2, g2 * -cert.beta_m)]
    entries.sort(key=lambda t: float(t[0]))
    sys_spec = Spectrum(tuple(Level(e) for e, _ in entries), env.basis)
    sys_state = LogState(tuple(lp for _, lp in entries))
    return sys_spec, sys_state, env


def project_lifted(e: Energy, cert: InstabilityCertificate) -> Energy:
    """Substitute the real gaps for the formal ``w1``, ``w2`` coordinates."""
    return Energy((e.coord(0),)) + cert.omega1 * e.coord(1) + cert.omega2 * e.coord(2)
