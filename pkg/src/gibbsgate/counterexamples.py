"""Stable non-Gibbs configurations for one- and two-mode environments,
and the single-mode forcing argument for commensurable gaps.

With fewer than three oscillator modes the coincidence constraints can
always be met by a normalizable environment state, so the Gibbs form is
not forced. The constructions below build that state explicitly and check
it with the constraint engine.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .constraints import (
    EnvAssignment,
    InconsistencyCertificate,
    Normalizable,
    build_ratio_graph,
    check_summability,
    solve_env_state,
)
from .energy import NEG_INF, Energy, as_energy, format_rational, is_neg_inf, ratio
from .errors import (
    ConstructionFailed,
    CrossCheckFailure,
    InvalidInput,
    LinearlyDependent,
    NoLatticeRepresentation,
    PreconditionViolation,
)
from .oscillator import MultimodeSpectrum, multimode_spectrum
from .spectrum import (
    LogState,
    PassivityViolation,
    Spectrum,
    check_passivity,
    is_gibbs,
)

DECAY_ROUNDING = 10**12


def _round_rational(x: float) -> Fraction:
    return Fraction(round(x * DECAY_ROUNDING), DECAY_ROUNDING)


# --------------------------------------------------------------------------
# Lattice cosets


@dataclass(frozen=True)
class CosetDecomposition:
    """Z^2 split into the cosets of the sublattice spanned by x and y.

    Each coset is represented by its smallest non-negative member, comparing
    the second coordinate first.
    """

    x: tuple[int, int]
    y: tuple[int, int]
    det: int
    representatives: tuple[tuple[int, int], ...]
    _by_key: dict = field(repr=False, compare=False, default_factory=dict)

    def key(self, v: Sequence[int]) -> tuple[int, int]:
        (x0, x1), (y0, y1) = self.x, self.y
        d = abs(self.det)
        return (y1 * v[0] - y0 * v[1]) % d, (x0 * v[1] - x1 * v[0]) % d

    def membership(self, v: Sequence[int]) -> tuple[tuple[int, int], int, int]:
        """Return ``(a, z1, z2)`` with ``v == a + z1*x + z2*y``."""
        a = self._by_key[self.key(v)]
        (x0, x1), (y0, y1) = self.x, self.y
        w0, w1 = v[0] - a[0], v[1] - a[1]
        z1, r1 = divmod(y1 * w0 - y0 * w1, self.det)
        z2, r2 = divmod(x0 * w1 - x1 * w0, self.det)
        assert r1 == 0 and r2 == 0
        return a, z1, z2


def coset_decomposition(x: Sequence[int], y: Sequence[int]) -> CosetDecomposition:
    x = (int(x[0]), int(x[1]))
    y = (int(y[0]), int(y[1]))
    det = x[0] * y[1] - x[1] * y[0]
    if det == 0:
        raise LinearlyDependent(f"x={x} and y={y} are linearly dependent", "x")
    d = abs(det)
    probe = CosetDecomposition(x, y, det, ())
    reps: dict[tuple[int, int], tuple[int, int]] = {}
    # d*e1 and d*e2 lie in the sublattice, so every coset meets [0, d)^2;
    # scanning with the last coordinate most significant keeps the first hit
    for b in range(d):
        for a in range(d):
            reps.setdefault(probe.key((a, b)), (a, b))
        if len(reps) == d:
            break
    ordered = tuple(sorted(reps.values(), key=lambda v: (v[1], v[0])))
    return CosetDecomposition(x, y, det, ordered, dict(reps))


@dataclass(frozen=True)
class LatticePair:
    x: tuple[int, int]
    y: tuple[int, int]
    det: int

    def to_json(self) -> dict:
        return {"x": list(self.x), "y": list(self.y), "det": self.det}


def _dot(v: Sequence[int], omegas: Sequence[Energy]) -> Energy:
    return omegas[0] * v[0] + omegas[1] * v[1]


def find_lattice_vector(gap: Energy, omegas: Sequence[Energy], bound: int = 16) -> tuple[int, int] | None:
    """Smallest-norm integer v in [-bound, bound]^2 with v . omegas == gap exactly."""
    best = None
    for v0 in range(-bound, bound + 1):
        rest = gap - omegas[0] * v0
        if rest.is_zero:
            v1 = Fraction(0)
        else:
            v1 = ratio(rest, omegas[1])
        if v1 is None or v1.denominator != 1 or abs(v1) > bound:
            continue
        cand = (v0, int(v1))
        if best is None or (abs(cand[0]) + abs(cand[1]), cand) < (abs(best[0]) + abs(best[1]), best):
            best = cand
    return best


# --------------------------------------------------------------------------
# Counterexample certificates


@dataclass(frozen=True)
class CounterexampleCertificate:
    """A stable-at-truncation joint state whose system part is not Gibbs."""

    mode: str
    system: dict
    frequencies: tuple[Energy, ...]
    truncations: tuple[int, ...]
    env_logg: dict
    verification: dict
    lattice: dict | None = None
    matched: dict | None = None

    @property
    def system_is_gibbs(self) -> bool:
        return self.verification["system"]["type"] == "gibbs"

    def to_json(self) -> dict:
        out = {
            "type": "counterexample",
            "mode": self.mode,
            "system": self.system,
            "environment": {
                "frequencies": [w.to_json() for w in self.frequencies],
                "truncations": list(self.truncations),
                "logg": [
                    {"index": list(k), "logg": _log_json(v)} for k, v in sorted(self.env_logg.items())
                ],
            },
            "verification": self.verification,
        }
        if self.lattice is not None:
            out["lattice"] = self.lattice
        if self.matched is not None:
            out["matched"] = self.matched
        return out


def _log_json(x):
    if is_neg_inf(x):
        return "-inf"
    return format_rational(x.rational) if x.is_rational else x.to_json()


def _three_level_incommensurable(sys_spec: Spectrum, sys_state: LogState):
    if len(sys_spec) != 3:
        raise PreconditionViolation("construction needs a three-level system", "levels")
    if len(sys_state) != 3:
        raise InvalidInput("state must have three entries", "logp")
    g1, g2 = sys_spec.gap(1), sys_spec.gap(2)
    if ratio(g2, g1) is not None:
        raise PreconditionViolation("system gaps are commensurable; use commensurable_forcing", "levels")
    passivity = check_passivity(sys_state, sys_spec)
    if isinstance(passivity, PassivityViolation):
        raise InvalidInput(f"system state is not passive: {passivity.reason}", "logp")
    state = sys_state.bound(sys_spec.basis)
    if not all(state.is_finite(i) for i in range(3)):
        raise PreconditionViolation("construction needs full support", "logp")
    return g1, g2, state


def _verify(sys_spec: Spectrum, state: LogState, env: MultimodeSpectrum, logg: dict) -> dict:
    """Check the constructed state against the constraint engine."""
    graph = build_ratio_graph(sys_spec, state, env)
    for e in graph.edges:
        if logg[e.s] - logg[e.r] != e.offset:
            raise CrossCheckFailure(f"constructed state violates edge {e.r}->{e.s}")
    if graph.zeros:
        raise ConstructionFailed("construction cannot honor forced zeros")
    solved = solve_env_state(graph)
    if isinstance(solved, InconsistencyCertificate):
        raise CrossCheckFailure("solver reports an inconsistency the constructed state refutes")
    summ = check_summability(solved, env)
    if not isinstance(summ, Normalizable):
        raise ConstructionFailed(f"environment state is not normalizable: {summ.to_json()}")
    # the explicit state must itself decay along every constrained mode
    own = EnvAssignment(logg, solved.components, solved.anchors, solved.component_of)
    own_summ = check_summability(own, env)
    if not isinstance(own_summ, Normalizable):
        raise ConstructionFailed(f"constructed state does not decay: {own_summ.to_json()}")
    return {
        "consistent": True,
        "edges": len(graph.edges),
        "components": len(solved.components),
        "summability": summ.to_json(),
        "system": is_gibbs(state, sys_spec).to_json(),
    }


def two_mode_counterexample(sys_spec: Spectrum, omegas: Sequence, sys_state: LogState, base_decay=1,
                            x: Sequence[int] | None = None, y: Sequence[int] | None = None,
                            trunc: int | Sequence[int] = 12, bound: int = 16) -> CounterexampleCertificate:
    """Environment state on two incommensurable modes, built coset by coset."""
    g1, g2, state = _three_level_incommensurable(sys_spec, sys_state)
    if len(omegas) != 2:
        raise InvalidInput("two frequencies required", "omegas")
    w = tuple(as_energy(o, sys_spec.basis) for o in omegas)
    if ratio(w[1], w[0]) is not None:
        raise PreconditionViolation("commensurable modes reduce to a single oscillator", "omegas")
    base_decay = Fraction(base_decay)
    if base_decay <= 0:
        raise InvalidInput("base decay must be positive", "base_decay")

    if x is None:
        x = find_lattice_vector(g1, w, bound)
    if y is None:
        y = find_lattice_vector(g2, w, bound)
    if x is None or y is None:
        raise NoLatticeRepresentation(f"no integer vectors in [-{bound}, {bound}]^2 reproduce the gaps")
    x, y = tuple(x), tuple(y)
    if _dot(x, w) == g2 and _dot(y, w) == g1:
        # vectors given in the order of the unsorted levels
        x, y = y, x
    if _dot(x, w) != g1 or _dot(y, w) != g2:
        raise InvalidInput("x . Omega and y . Omega must equal the system gaps", "x")
    cosets = coset_decomposition(x, y)

    d1, d2 = state[1] - state[0], state[2] - state[0]
    # decay rate per unit step of each mode: solve rates . x = d1, rates . y = d2
    det = cosets.det
    rate0 = (d1 * y[1] - d2 * x[1]) / det
    rate1 = (d2 * x[0] - d1 * y[0]) / det
    if not (rate0 < 0 and rate1 < 0):
        raise ConstructionFailed(
            f"propagated populations do not decay: rates {rate0!r}, {rate1!r} per step"
        )

    truncs = (trunc, trunc) if isinstance(trunc, int) else tuple(trunc)
    env = multimode_spectrum(w, truncs, sys_spec.basis)
    base = {a: Energy(-_round_rational(float(base_decay) * float(_dot(a, w)))) for a in cosets.representatives}
    logg = {}
    table = {}
    for flat, v in enumerate(env.indices):
        a, z1, z2 = cosets.membership(v)
        value = base[a] + d1 * z1 + d2 * z2
        logg[flat] = value
        table[v] = value

    verification = _verify(sys_spec, state, env, logg)
    verification["decay_rates"] = [_log_json(rate0), _log_json(rate1)]
    lattice = LatticePair(x, y, det).to_json()
    lattice["representatives"] = [list(a) for a in cosets.representatives]
    return CounterexampleCertificate(
        "two",
        {"spectrum": sys_spec.to_json(), "state": state.to_json()},
        w,
        truncs,
        table,
        verification,
        lattice=lattice,
    )


def single_mode_counterexample(sys_spec: Spectrum, omega, sys_state: LogState, trunc: int = 20,
                               decay=1) -> CounterexampleCertificate:
    """Environment ladder matched to at most one system transition."""
    g1, g2, state = _three_level_incommensurable(sys_spec, sys_state)
    omega = as_energy(omega, sys_spec.basis)
    if not omega > 0:
        raise InvalidInput("frequency must be positive", "omega")
    energies = sys_spec.energies
    matched = None
    for i, j in ((0, 1), (0, 2), (1, 2)):
        r = ratio(energies[j] - energies[i], omega)
        if r is not None and r.denominator == 1 and r > 0:
            matched = (i, j, int(r))
            break
    if matched is None:
        step = Energy(-_round_rational(float(Fraction(decay)) * float(omega)))
        info = {"transition": None}
    else:
        i, j, ell = matched
        step = (state[j] - state[i]) / ell
        info = {"transition": [i, j], "ell": ell}
    env = multimode_spectrum([omega], [trunc], sys_spec.basis)
    logg = {k: step * k for k in range(trunc)}
    verification = _verify(sys_spec, state, env, logg)
    return CounterexampleCertificate(
        "one",
        {"spectrum": sys_spec.to_json(), "state": state.to_json()},
        (omega,),
        (trunc,),
        {(k,): v for k, v in logg.items()},
        verification,
        matched=info,
    )


# --------------------------------------------------------------------------
# Phi tables and commensurable forcing


@dataclass(frozen=True)
class PhiTable:
    """log Phi on gap sums ``(E_m - E_0) + (E'_n - E'_r)``."""

    values: dict
    sources: dict

    def functional_equation_violations(self) -> list[tuple[Energy, Energy]]:
        """Pairs (d1, d2) of represented gaps with d1 + d2 represented and log Phi not additive."""
        bad = []
        keys = list(self.values)
        for d1 in keys:
            for d2 in keys:
                s = d1 + d2
                if s in self.values and self.values[s] != _log_add(self.values[d1], self.values[d2]):
                    bad.append((d1, d2))
        return bad


@dataclass(frozen=True)
class WellDefinednessViolation:
    gap: Energy
    first: tuple[int, int]
    second: tuple[int, int]
    first_value: object
    second_value: object

    def to_json(self) -> dict:
        return {
            "type": "phi_violation",
            "gap": self.gap.to_json(),
            "first": list(self.first),
            "second": list(self.second),
            "values": [_log_json(self.first_value), _log_json(self.second_value)],
        }


def _log_add(a, b):
    if is_neg_inf(a) or is_neg_inf(b):
        return NEG_INF
    return a + b


def _log_sub(a, b):
    if is_neg_inf(a):
        return NEG_INF
    return a - b


def phi_table(sys_state: LogState, sys_spec: Spectrum, env_state: LogState, env_spec: Spectrum, r: int = 0):
    sys_state = sys_state.bound(sys_spec.basis)
    env_state = env_state.bound(env_spec.basis)
    if len(sys_state) != len(sys_spec) or len(env_state) != len(env_spec):
        raise InvalidInput("state and spectrum lengths differ", "logp")
    if not 0 <= r < len(env_spec) or not env_state.is_finite(r):
        raise InvalidInput("reference environment level needs a positive population", "r")
    if not sys_state.is_finite(0):
        raise InvalidInput("ground population must be positive", "logp[0]")
    values: dict = {}
    sources: dict = {}
    for m in range(len(sys_spec)):
        for n in range(len(env_spec)):
            d = sys_spec.gap(m) + (env_spec.levels[n].energy - env_spec.levels[r].energy)
            v = _log_add(_log_sub(sys_state[m], sys_state[0]), _log_sub(env_state[n], env_state[r]))
            if d in values:
                if values[d] != v:
                    return WellDefinednessViolation(d, sources[d], (m, n), values[d], v)
                continue
            values[d] = v
            sources[d] = (m, n)
    return PhiTable(values, sources)


@dataclass(frozen=True)
class ForcedEqual:
    beta: Fraction | float
    m: int
    n: int
    k: int
    ell: int
    omega: Energy

    def to_json(self) -> dict:
        beta = "inf" if isinstance(self.beta, float) else format_rational(self.beta)
        return {
            "type": "forced_equal",
            "beta": beta,
            "pair": [self.m, self.n],
            "k": self.k,
            "ell": self.ell,
            "omega": self.omega.to_json(),
        }


@dataclass(frozen=True)
class Contradiction:
    m: int
    n: int
    k: int
    ell: int
    omega: Energy
    gap: Energy
    via_n: object
    via_m: object

    @property
    def mismatch(self):
        if is_neg_inf(self.via_n) or is_neg_inf(self.via_m):
            return None
        return self.via_n - self.via_m

    def to_json(self) -> dict:
        return {
            "type": "contradiction",
            "pair": [self.m, self.n],
            "k": self.k,
            "ell": self.ell,
            "omega": self.omega.to_json(),
            "gap": self.gap.to_json(),
            "log_phi_via_n": _log_json(self.via_n),
            "log_phi_via_m": _log_json(self.via_m),
        }


def commensurable_forcing(sys_spec: Spectrum, sys_state: LogState, m: int, n: int):
    """Single-mode argument: iterate log Phi up to k*E_n == ell*E_m and compare.

    With ``E_m / E_n = k / ell`` and an oscillator of frequency
    ``E_n / ell``, every multiple ``j*E_n`` splits as a system gap ``E_n``
    plus an oscillator gap ``(j-1)*E_n``, so ``log Phi(k*E_n) = k log Phi(E_n)``;
    likewise along ``E_m``. The two chains meet at the same energy.
    """
    if not 1 <= m < n < len(sys_spec):
        raise InvalidInput("need excited levels 1 <= m < n", "pair")
    state = sys_state.bound(sys_spec.basis)
    if len(state) != len(sys_spec):
        raise InvalidInput("state and spectrum lengths differ", "logp")
    if not state.is_finite(0):
        raise InvalidInput("ground population must be positive", "logp[0]")
    e_m, e_n = sys_spec.gap(m), sys_spec.gap(n)
    r = ratio(e_m, e_n)
    if r is None:
        raise PreconditionViolation("gap ratio is irrational; use the three-mode attack", "pair")
    k, ell = r.numerator, r.denominator
    omega = e_n / ell
    assert e_m == omega * k

    phi_n = _log_sub(state[n], state[0])
    phi_m = _log_sub(state[m], state[0])
    # chain along E_n: Phi(j E_n) = Phi(E_n) Phi((j-1) E_n), the second factor an oscillator gap
    via_n = phi_n
    for _ in range(2, k + 1):
        via_n = _log_add(phi_n, via_n)
    via_m = phi_m
    for _ in range(2, ell + 1):
        via_m = _log_add(phi_m, via_m)
    gap = e_n * k
    assert gap == e_m * ell

    if via_n == via_m:
        if is_neg_inf(phi_n):
            beta = math.inf
        else:
            beta = ratio(-phi_n, e_n)
            if beta is None:
                beta = -float(phi_n) / float(e_n)
        return ForcedEqual(beta, m, n, k, ell, omega)
    return Contradiction(m, n, k, ell, omega, gap, via_n, via_m)
