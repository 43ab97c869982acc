"""Spectra, diagonal states and the structure checks on them.

States are kept as unnormalized log-populations, one per distinct level.
Every verdict here depends only on population ratios, so adding a common
constant to all finite entries never changes a result.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

from .energy import (
    NEG_INF,
    POS_INF,
    UNIT_BASIS,
    Basis,
    Energy,
    as_energy,
    format_rational,
    is_neg_inf,
    log_from_json,
    log_to_json,
    parse_rational,
    ratio,
)
from .errors import InvalidInput

DEFAULT_TOL = 1e-9
NORMALIZATION_TOL = 1e-12


@dataclass(frozen=True)
class Level:
    energy: Energy
    mult: int = 1


@dataclass(frozen=True)
class Spectrum:
    """Finite, strictly increasing list of levels with multiplicities."""

    levels: tuple[Level, ...]
    basis: Basis = UNIT_BASIS
    origin: Mapping | None = None

    def __post_init__(self):
        if not self.levels:
            raise InvalidInput("spectrum must have at least one level", "levels")
        bound = []
        for i, lvl in enumerate(self.levels):
            if not isinstance(lvl.mult, int) or lvl.mult < 1:
                raise InvalidInput(f"multiplicity must be a positive integer", f"levels[{i}].mult")
            bound.append(Level(lvl.energy.with_basis(self.basis), lvl.mult))
        for i in range(1, len(bound)):
            if not bound[i - 1].energy < bound[i].energy:
                raise InvalidInput("levels must be strictly increasing", f"levels[{i}]")
        object.__setattr__(self, "levels", tuple(bound))

    @classmethod
    def from_energies(cls, energies: Sequence, basis: Basis = UNIT_BASIS, origin=None) -> "Spectrum":
        """Build a spectrum from possibly repeated, unsorted energies."""
        counts: dict[Energy, int] = {}
        for e in energies:
            e = as_energy(e, basis)
            counts[e] = counts.get(e, 0) + 1
        ordered = sorted(counts, key=float)
        return cls(tuple(Level(e, counts[e]) for e in ordered), basis, origin)

    def __len__(self) -> int:
        return len(self.levels)

    @property
    def energies(self) -> tuple[Energy, ...]:
        return tuple(l.energy for l in self.levels)

    @property
    def ground(self) -> Energy:
        return self.levels[0].energy

    def gap(self, n: int) -> Energy:
        return self.levels[n].energy - self.levels[0].energy

    @property
    def total_multiplicity(self) -> int:
        return sum(l.mult for l in self.levels)

    def shifted(self, c) -> "Spectrum":
        c = as_energy(c, self.basis)
        return Spectrum(tuple(Level(l.energy + c, l.mult) for l in self.levels), self.basis, self.origin)

    def scaled(self, c) -> "Spectrum":
        c = parse_rational(c)
        return Spectrum(tuple(Level(l.energy * c, l.mult) for l in self.levels), self.basis, self.origin)

    def to_json(self) -> dict:
        gens = [{"name": "unit"}] + [
            {"name": n, "value": v} for n, v in zip(self.basis.names[1:], self.basis.values[1:])
        ]
        return {
            "generators": gens,
            "levels": [{"coords": l.energy.to_json(), "mult": l.mult} for l in self.levels],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "Spectrum":
        if not isinstance(data, Mapping):
            raise InvalidInput("spectrum must be a JSON object", "spectrum")
        basis = basis_from_json(data.get("generators", [{"name": "unit"}]))
        raw = data.get("levels")
        if not isinstance(raw, list) or not raw:
            raise InvalidInput("spectrum needs a non-empty 'levels' list", "levels")
        levels = []
        for i, item in enumerate(raw):
            if not isinstance(item, Mapping) or "coords" not in item:
                raise InvalidInput("level needs 'coords'", f"levels[{i}]")
            e = Energy.from_json(item["coords"], basis, f"levels[{i}].coords")
            mult = item.get("mult", 1)
            if isinstance(mult, bool) or not isinstance(mult, int):
                raise InvalidInput("multiplicity must be an integer", f"levels[{i}].mult")
            levels.append(Level(e, mult))
        return cls(tuple(levels), basis)


def basis_from_json(gens) -> Basis:
    if not isinstance(gens, list) or not gens:
        raise InvalidInput("'generators' must be a non-empty list", "generators")
    names, values = [], []
    for i, g in enumerate(gens):
        if not isinstance(g, Mapping) or "name" not in g:
            raise InvalidInput("generator needs a 'name'", f"generators[{i}]")
        names.append(str(g["name"]))
        value = g.get("value", 1.0 if i == 0 else None)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise InvalidInput("generator needs a numeric 'value'", f"generators[{i}].value")
        values.append(float(value))
    return Basis(tuple(names), tuple(values))


@dataclass(frozen=True)
class LogState:
    """Unnormalized log-populations per spectrum level; NEG_INF marks zero."""

    logp: tuple

    def __post_init__(self):
        vals = []
        for i, x in enumerate(self.logp):
            if is_neg_inf(x):
                vals.append(NEG_INF)
            elif isinstance(x, Energy):
                vals.append(x)
            else:
                try:
                    vals.append(as_energy(x))
                except InvalidInput as exc:
                    raise InvalidInput(str(exc), f"logp[{i}]") from None
        if not any(isinstance(v, Energy) for v in vals):
            raise InvalidInput("state needs at least one finite log-population", "logp")
        object.__setattr__(self, "logp", tuple(vals))

    def __len__(self) -> int:
        return len(self.logp)

    def __getitem__(self, n):
        return self.logp[n]

    def is_finite(self, n: int) -> bool:
        return not is_neg_inf(self.logp[n])

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i for i in range(len(self.logp)) if self.is_finite(i))

    def shifted(self, c) -> "LogState":
        """Add a common constant to every finite entry."""
        return LogState(tuple(x if is_neg_inf(x) else x + c for x in self.logp))

    def bound(self, basis: Basis) -> "LogState":
        return LogState(tuple(x if is_neg_inf(x) else x.with_basis(basis) for x in self.logp))

    def populations(self, basis: Basis | None = None) -> list[float]:
        """Numeric populations normalized to unit sum."""
        vals = [NEG_INF if is_neg_inf(x) else float(x.with_basis(basis) if basis else x) for x in self.logp]
        top = max(v for v in vals if v != NEG_INF)
        weights = [0.0 if v == NEG_INF else math.exp(v - top) for v in vals]
        total = math.fsum(weights)
        out = [w / total for w in weights]
        assert abs(math.fsum(out) - 1.0) < NORMALIZATION_TOL * len(out) + NORMALIZATION_TOL
        return out

    def to_json(self) -> dict:
        return {"logp": [log_to_json(x) for x in self.logp]}

    @classmethod
    def from_json(cls, data: Mapping, basis: Basis | None = None) -> "LogState":
        if not isinstance(data, Mapping) or not isinstance(data.get("logp"), list):
            raise InvalidInput("state needs a 'logp' list", "logp")
        return cls(tuple(log_from_json(x, basis, f"logp[{i}]") for i, x in enumerate(data["logp"])))


def _check_state(state: LogState, spec: Spectrum) -> LogState:
    if len(state) != len(spec):
        raise InvalidInput(f"state has {len(state)} entries for {len(spec)} levels", "logp")
    return state.bound(spec.basis)


# --------------------------------------------------------------------------
# Existence of Gibbs states


class TraceVerdict(enum.Enum):
    TRACE_CLASS = "TraceClass"
    NOT_TRACE_CLASS = "NotTraceClass"
    INCONCLUSIVE = "InconclusiveNumeric"


@dataclass(frozen=True)
class GrowthFamily:
    """How the infinite sequence of levels grows.

    kinds: ``explicit`` (finite list), ``linear`` (E_n = a n + b),
    ``logarithmic`` (E_n = c ln(n+1)), ``bounded`` (infinitely many levels
    below ``bound``) and ``callback`` (E_n supplied by a function).
    """

    kind: str
    params: tuple[Fraction, ...] = ()
    energies: tuple = ()
    callback: Callable[[int], float] | None = None

    KINDS = ("explicit", "linear", "logarithmic", "bounded", "callback")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise InvalidInput(f"unknown growth family {self.kind!r}", "kind")
        params = tuple(parse_rational(p, "params") for p in self.params)
        object.__setattr__(self, "params", params)
        if self.kind == "linear" and (len(params) != 2 or params[0] <= 0):
            raise InvalidInput("linear family needs a > 0 and b", "params")
        if self.kind == "logarithmic" and (len(params) != 1 or params[0] <= 0):
            raise InvalidInput("logarithmic family needs c > 0", "params")
        if self.kind == "bounded" and len(params) != 1:
            raise InvalidInput("bounded family needs its bound", "params")
        if self.kind == "callback" and self.callback is None:
            raise InvalidInput("callback family needs a callback", "callback")
        if self.kind == "explicit" and not self.energies:
            raise InvalidInput("explicit family needs at least one energy", "energies")

    @classmethod
    def linear(cls, a, b=0):
        return cls("linear", (a, b))

    @classmethod
    def logarithmic(cls, c):
        return cls("logarithmic", (c,))

    @classmethod
    def bounded(cls, bound):
        return cls("bounded", (bound,))

    @classmethod
    def explicit(cls, energies):
        return cls("explicit", energies=tuple(energies))

    @classmethod
    def custom(cls, fn: Callable[[int], float]):
        return cls("callback", callback=fn)


@dataclass(frozen=True)
class TraceClassReport:
    verdict: TraceVerdict
    beta0_estimate: float
    note: str = ""

    def to_json(self) -> dict:
        return {
            "type": "trace_class",
            "verdict": self.verdict.value,
            "beta0_estimate": _float_json(self.beta0_estimate),
            "note": self.note,
        }


def _float_json(x: float):
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _positive_beta(beta, field="beta") -> Fraction:
    b = parse_rational(beta, field)
    if b <= 0:
        raise InvalidInput("inverse temperature must be positive", field)
    return b


def check_trace_class(family: GrowthFamily, beta, window: int = 1024) -> TraceClassReport:
    """Decide whether exp(-beta H) is trace class for a level family."""
    beta = _positive_beta(beta)
    kind = family.kind
    if kind == "explicit":
        return TraceClassReport(TraceVerdict.TRACE_CLASS, 0.0, "finite-dimensional")
    if kind == "linear":
        return TraceClassReport(TraceVerdict.TRACE_CLASS, 0.0, "ln n / E_n -> 0")
    if kind == "bounded":
        return TraceClassReport(TraceVerdict.NOT_TRACE_CLASS, POS_INF, "infinitely many levels below a bound")
    if kind == "logarithmic":
        (c,) = family.params
        # sum (n+1)^(-beta c) converges iff beta c > 1
        verdict = TraceVerdict.TRACE_CLASS if beta * c > 1 else TraceVerdict.NOT_TRACE_CLASS
        return TraceClassReport(verdict, float(1 / c), "p-series exponent beta*c")

    if window < 16:
        raise InvalidInput("callback families need window >= 16", "window")
    values = [float(family.callback(n)) for n in range(window)]
    for n in range(1, window):
        if values[n] < values[n - 1]:
            raise InvalidInput(f"callback energies decrease at n={n}", "callback")
    tail = [math.log(n) / values[n] for n in range(max(2, window // 2), window) if values[n] > 0]
    estimate = max(tail) if tail else POS_INF
    return TraceClassReport(
        TraceVerdict.INCONCLUSIVE, max(estimate, 0.0), f"limsup ln n / E_n estimated over n < {window}"
    )


# --------------------------------------------------------------------------
# Gibbs states and beta profiles


@dataclass(frozen=True)
class PartitionValue:
    value: float
    tail_bound_asserted: bool = False


def partition_function(spec: Spectrum, beta) -> PartitionValue:
    """Sum of mult * exp(-beta E) over the truncation; no tail bound is claimed."""
    b = float(beta)
    if not b > 0:
        raise InvalidInput("inverse temperature must be positive", "beta")
    return PartitionValue(math.fsum(l.mult * math.exp(-b * float(l.energy)) for l in spec.levels))


def _is_pos_inf(beta) -> bool:
    return isinstance(beta, float) and beta == POS_INF or (isinstance(beta, str) and beta.strip() in ("inf", "+inf"))


def gibbs_state(spec: Spectrum, beta) -> LogState:
    if _is_pos_inf(beta):
        return LogState((Energy(),) + (NEG_INF,) * (len(spec) - 1))
    b = _positive_beta(beta)
    return LogState(tuple(-(spec.gap(n) * b) for n in range(len(spec))))


@dataclass(frozen=True)
class BetaProfile:
    """Per-level inverse temperatures relative to the ground level (n >= 1)."""

    betas: Mapping[int, Fraction | float]
    approximate: frozenset = frozenset()
    tol: float = DEFAULT_TOL

    def is_exact(self, n: int) -> bool:
        return n not in self.approximate

    def to_json(self) -> dict:
        out = {}
        for n, b in self.betas.items():
            if isinstance(b, float):
                out[str(n)] = "inf" if b == POS_INF else repr(b)
            else:
                out[str(n)] = format_rational(b)
        return {"betas": out, "approximate": sorted(self.approximate)}


def beta_profile(state: LogState, spec: Spectrum, tol: float = DEFAULT_TOL) -> BetaProfile:
    state = _check_state(state, spec)
    if not state.is_finite(0):
        raise InvalidInput("ground-level population is zero; beta undefined", "logp[0]")
    betas: dict[int, Fraction | float] = {}
    approx = set()
    l0 = state[0]
    for n in range(1, len(spec)):
        if not state.is_finite(n):
            betas[n] = POS_INF
            continue
        drop = l0 - state[n]
        gap = spec.gap(n)
        exact = ratio(drop, gap)
        if exact is not None:
            betas[n] = exact
        else:
            betas[n] = float(drop) / float(gap)
            approx.add(n)
    return BetaProfile(betas, frozenset(approx), tol)


def betas_equal(a, b, tol: float = DEFAULT_TOL, exact: bool = True) -> bool:
    if isinstance(a, float) and math.isinf(a) or isinstance(b, float) and math.isinf(b):
        return a == b
    if exact and not isinstance(a, float) and not isinstance(b, float):
        return a == b
    return math.isclose(float(a), float(b), rel_tol=tol, abs_tol=tol * 1e-3)


# --------------------------------------------------------------------------
# Structure checks


@dataclass(frozen=True)
class Passive:
    def to_json(self) -> dict:
        return {"type": "passive"}


@dataclass(frozen=True)
class PassivityViolation:
    n: int
    m: int
    reason: str

    def to_json(self) -> dict:
        return {"type": "passivity_violation", "pair": [self.n, self.m], "reason": self.reason}


def check_passivity(state: LogState, spec: Spectrum) -> Passive | PassivityViolation:
    """Populations must strictly decrease on the support, zeros only at the top."""
    state = _check_state(state, spec)
    for i in range(len(spec) - 1):
        a, b = state[i], state[i + 1]
        if is_neg_inf(b):
            continue
        if is_neg_inf(a):
            return PassivityViolation(i, i + 1, "support is not a lower set of the spectrum")
        if not b < a:
            return PassivityViolation(i, i + 1, "population does not strictly decrease")
    return Passive()


@dataclass(frozen=True)
class Gibbs:
    beta: Fraction | float

    def to_json(self) -> dict:
        return {"type": "gibbs", "beta": beta_to_json(self.beta)}


@dataclass(frozen=True)
class NotGibbs:
    n: int
    m: int
    reason: str = ""

    def to_json(self) -> dict:
        return {"type": "not_gibbs", "pair": [self.n, self.m], "reason": self.reason}


def beta_to_json(beta) -> str:
    if isinstance(beta, float):
        return "inf" if beta == POS_INF else repr(beta)
    return format_rational(beta)


def beta_from_json(text):
    if isinstance(text, str) and text.strip() in ("inf", "+inf"):
        return POS_INF
    if isinstance(text, str) and ("e" in text.lower() or "." in text):
        return float(text)
    return parse_rational(text, "beta")


def is_gibbs(state: LogState, spec: Spectrum, tol: float = DEFAULT_TOL) -> Gibbs | NotGibbs:
    passivity = check_passivity(state, spec)
    if isinstance(passivity, PassivityViolation):
        return NotGibbs(passivity.n, passivity.m, passivity.reason)
    state = _check_state(state, spec)
    if state.support == (0,):
        return Gibbs(POS_INF)
    profile = beta_profile(state, spec, tol)
    ref = profile.betas[1]
    for n in range(2, len(spec)):
        b = profile.betas[n]
        exact = profile.is_exact(1) and profile.is_exact(n)
        if not betas_equal(ref, b, tol, exact):
            return NotGibbs(1, n, "beta profile is not constant")
    return Gibbs(ref)


def is_function_of_hamiltonian(populations: Sequence, spec: Spectrum, tol: float = DEFAULT_TOL) -> bool:
    """Populations listed per eigenvector slot must agree within each degenerate level."""
    if len(populations) != spec.total_multiplicity:
        raise InvalidInput(
            f"{len(populations)} populations for total multiplicity {spec.total_multiplicity}", "populations"
        )
    pos = 0
    for level in spec.levels:
        block = populations[pos:pos + level.mult]
        pos += level.mult
        first = block[0]
        for x in block[1:]:
            if isinstance(x, float) or isinstance(first, float):
                if not math.isclose(float(x), float(first), rel_tol=tol, abs_tol=tol * 1e-3):
                    return False
            elif x != first:
                return False
    return True
