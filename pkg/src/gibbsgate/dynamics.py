"""Finite-dimensional first-order stability checks.

A truncated system is evolved under ``H + lam*V`` by diagonalizing the
perturbed Hamiltonian once; expectations at any time are then an exact sum
of phases. Scans record the grid supremum of ``|<O>_t - <O>_0|`` for a
decreasing sequence of couplings.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import InvalidInput, NumericError
from .spectrum import LogState, Spectrum

HERMITIAN_TOL = 1e-12
STATE_TOL = 1e-10
STATIONARY_TOL = 1e-10
IMAG_TOL = 1e-9
MAX_DIM = 512
MAX_JOINT_DIM = 4096

HORIZON_FACTOR = 8.0
GRID_POINTS = 2048
DECAY_FLOOR = 1e-3
PERSIST_FLOOR = 0.1
MARGINAL_TOL = 1e-10


def _matrix(a, name: str) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
        raise InvalidInput(f"{name} must be a non-empty square matrix", name)
    if not np.all(np.isfinite(m)):
        raise InvalidInput(f"{name} has non-finite entries", name)
    return m


def _check_hermitian(m: np.ndarray, name: str) -> None:
    residual = np.max(np.abs(m - m.conj().T))
    if residual >= HERMITIAN_TOL * max(1.0, np.max(np.abs(m))):
        raise InvalidInput(f"{name} is not self-adjoint (residual {residual:.3g})", name)


def op_norm(m: np.ndarray) -> float:
    return float(np.linalg.norm(m, 2))


@dataclass(frozen=True)
class TruncatedSystem:
    hamiltonian: np.ndarray
    state: np.ndarray
    observable: np.ndarray

    def __post_init__(self):
        h = _matrix(self.hamiltonian, "hamiltonian")
        rho = _matrix(self.state, "state")
        o = _matrix(self.observable, "observable")
        if not h.shape == rho.shape == o.shape:
            raise InvalidInput("hamiltonian, state and observable differ in shape", "state")
        for m, name in ((h, "hamiltonian"), (rho, "state"), (o, "observable")):
            _check_hermitian(m, name)
        tr = np.trace(rho).real
        if abs(tr - 1) > STATE_TOL:
            raise InvalidInput(f"state trace is {tr!r}, expected 1", "state")
        if np.linalg.eigvalsh(rho).min() < -STATE_TOL:
            raise InvalidInput("state is not positive semidefinite", "state")
        if op_norm(o) > 1 + 1e-12:
            raise InvalidInput("observable norm exceeds 1", "observable")
        object.__setattr__(self, "hamiltonian", h)
        object.__setattr__(self, "state", rho)
        object.__setattr__(self, "observable", o)

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    def expectation(self) -> float:
        return float(np.trace(self.observable @ self.state).real)

    def commutator_norm(self) -> float:
        h, rho = self.hamiltonian, self.state
        return op_norm(h @ rho - rho @ h)


def system_from_state(spec: Spectrum, state: LogState, observable=None) -> TruncatedSystem:
    """Diagonal embedding of a spectrum and a state, one basis vector per multiplicity."""
    energies, pops = [], []
    probs = state.populations(spec.basis)
    for level, p in zip(spec.levels, probs):
        energies += [float(level.energy)] * level.mult
        pops += [p / level.mult] * level.mult
    rho = np.diag(pops).astype(complex)
    rho /= np.trace(rho).real
    h = np.diag(energies).astype(complex)
    if observable is None:
        observable = np.zeros_like(h)
        observable[0, 0] = 1
    return TruncatedSystem(h, rho, observable)


class _Evolution:
    """``t -> Tr[O exp(-iKt) rho exp(iKt)]`` for a fixed ``K = H + lam V``."""

    def __init__(self, sys: TruncatedSystem, V: np.ndarray, lam: float):
        k = sys.hamiltonian + lam * V
        try:
            w, u = np.linalg.eigh(k)
        except np.linalg.LinAlgError as exc:
            raise NumericError(f"diagonalization failed: {exc}; cond={np.linalg.cond(k):.3g}") from None
        rho = u.conj().T @ sys.state @ u
        o = u.conj().T @ sys.observable @ u
        self.w = w
        self.m = rho * o.T

    def __call__(self, times) -> np.ndarray:
        t = np.atleast_1d(np.asarray(times, dtype=float))
        ph = np.exp(-1j * np.outer(t, self.w))
        vals = np.einsum("ta,ab,tb->t", ph, self.m, ph.conj())
        scale = max(1.0, float(np.max(np.abs(vals))))
        if np.max(np.abs(vals.imag)) > IMAG_TOL * scale:
            raise NumericError(f"expectation has imaginary part {np.max(np.abs(vals.imag)):.3g}")
        return vals.real


def _perturbation(V, sys: TruncatedSystem, max_dim: int = MAX_DIM) -> np.ndarray:
    if sys.dim > max_dim:
        raise InvalidInput(f"dimension {sys.dim} exceeds {max_dim}", "dim")
    v = _matrix(V, "V")
    if v.shape != sys.hamiltonian.shape:
        raise InvalidInput("perturbation shape does not match the system", "V")
    _check_hermitian(v, "V")
    return v


def evolve_expectation(sys: TruncatedSystem, V, lam: float, times: Sequence[float]) -> np.ndarray:
    v = _perturbation(V, sys)
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or (t.size and (t.min() < 0 or np.any(np.diff(t) < 0))):
        raise InvalidInput("times must be non-negative and sorted", "times")
    return _Evolution(sys, v, float(lam))(t)


def evolve_state(sys: TruncatedSystem, V, lam: float, t: float) -> np.ndarray:
    """``exp(-iKt) rho exp(iKt)`` with ``K = H + lam V``."""
    v = _perturbation(V, sys)
    w, u = np.linalg.eigh(sys.hamiltonian + lam * v)
    prop = (u * np.exp(-1j * w * t)) @ u.conj().T
    return prop @ sys.state @ prop.conj().T


def time_grid(lam: float, factor: float = HORIZON_FACTOR, points: int = GRID_POINTS) -> np.ndarray:
    return np.linspace(0.0, factor / lam, points)


# --------------------------------------------------------------------------
# Scans


@dataclass(frozen=True)
class DecaysToZero:
    rate: float

    def to_json(self) -> dict:
        return {"type": "decays_to_zero", "rate": _num(self.rate)}


@dataclass(frozen=True)
class Persistent:
    floor: float

    def to_json(self) -> dict:
        return {"type": "persistent", "floor": _num(self.floor)}


@dataclass(frozen=True)
class Inconclusive:
    reason: str

    def to_json(self) -> dict:
        return {"type": "inconclusive", "reason": self.reason}


def _num(x: float):
    return repr(float(x)) if math.isfinite(x) else ("inf" if x > 0 else "-inf")


@dataclass(frozen=True)
class StabilityScan:
    lambdas: tuple[float, ...]
    deviations: tuple[float, ...]
    time_horizon: tuple[float, ...]
    verdict: DecaysToZero | Persistent | Inconclusive

    def to_json(self) -> dict:
        return {
            "type": "stability_scan",
            "lambdas": [repr(x) for x in self.lambdas],
            "deviations": [repr(x) for x in self.deviations],
            "time_horizon": [repr(x) for x in self.time_horizon],
            "verdict": self.verdict.to_json(),
        }


def sup_deviation(evo: _Evolution, base: float, times: np.ndarray) -> float:
    """Grid maximum of the deviation, polished by a bounded search around the best point."""
    dev = np.abs(evo(times) - base)
    k = int(np.argmax(dev))
    best = float(dev[k])
    if times.size < 3:
        return best
    lo, hi = times[max(k - 1, 0)], times[min(k + 1, times.size - 1)]
    res = minimize_scalar(lambda t: -abs(float(evo(t)[0]) - base), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12 * max(1.0, hi)})
    return max(best, -float(res.fun))


def _fit_verdict(lambdas, devs, decay_floor, persist_floor):
    if all(d > persist_floor for d in devs):
        return Persistent(min(devs))
    halving = all(
        d1 <= d0 * (l1 / l0) + 1e-14 for (l0, d0), (l1, d1) in zip(zip(lambdas, devs), zip(lambdas[1:], devs[1:]))
    )
    if halving and devs[-1] < decay_floor:
        pos = [(l, d) for l, d in zip(lambdas, devs) if d > 1e-14]
        if len(pos) < 2:
            return DecaysToZero(math.inf)
        slope = np.polyfit(np.log([l for l, _ in pos]), np.log([d for _, d in pos]), 1)[0]
        return DecaysToZero(float(slope))
    return Inconclusive("deviations neither plateau above the persistence floor nor decay linearly below the decay floor")


def first_order_stability_scan(sys: TruncatedSystem, V, lambdas: Sequence[float], factor: float = HORIZON_FACTOR,
                               points: int = GRID_POINTS, decay_floor: float = DECAY_FLOOR,
                               persist_floor: float = PERSIST_FLOOR) -> StabilityScan:
    v = _perturbation(V, sys)
    comm = sys.commutator_norm()
    if comm >= STATIONARY_TOL:
        raise InvalidInput(f"state is not stationary: commutator norm {comm:.3g}", "state")
    lams = sorted((float(x) for x in lambdas), reverse=True)
    if not lams or lams[-1] <= 0:
        raise InvalidInput("couplings must be positive", "lambdas")
    base = sys.expectation()
    devs, horizons = [], []
    for lam in lams:
        times = time_grid(lam, factor, points)
        devs.append(sup_deviation(_Evolution(sys, v, lam), base, times))
        horizons.append(float(times[-1]))
    return StabilityScan(tuple(lams), tuple(devs), tuple(horizons), _fit_verdict(lams, devs, decay_floor, persist_floor))


# --------------------------------------------------------------------------
# Marginals


@dataclass(frozen=True)
class Verified:
    max_discrepancy: float

    def to_json(self) -> dict:
        return {"type": "marginal_verified", "max_discrepancy": repr(self.max_discrepancy)}


@dataclass(frozen=True)
class Failed:
    discrepancy: float

    def to_json(self) -> dict:
        return {"type": "marginal_failed", "discrepancy": repr(self.discrepancy)}


def joint_system(sys_a: TruncatedSystem, sys_b: TruncatedSystem) -> TruncatedSystem:
    ia, ib = np.eye(sys_a.dim), np.eye(sys_b.dim)
    h = np.kron(sys_a.hamiltonian, ib) + np.kron(ia, sys_b.hamiltonian)
    return TruncatedSystem(h, np.kron(sys_a.state, sys_b.state), np.kron(sys_a.observable, ib))


def marginal_stability_check(sys_a: TruncatedSystem, sys_b: TruncatedSystem, V_a, lambdas: Sequence[float],
                             factor: float = HORIZON_FACTOR, points: int = GRID_POINTS):
    """Compare joint evolution under the lifted perturbation with the marginal evolution."""
    dim = sys_a.dim * sys_b.dim
    if dim > MAX_JOINT_DIM:
        raise InvalidInput(f"joint dimension {dim} exceeds {MAX_JOINT_DIM}", "dim")
    v_a = _perturbation(V_a, sys_a, MAX_JOINT_DIM)
    joint = joint_system(sys_a, sys_b)
    v = np.kron(v_a, np.eye(sys_b.dim))
    worst = 0.0
    for lam in lambdas:
        lam = float(lam)
        times = time_grid(lam, factor, points) if lam > 0 else np.linspace(0.0, factor, points)
        a = _Evolution(sys_a, v_a, lam)(times)
        b = _Evolution(joint, v, lam)(times)
        worst = max(worst, float(np.max(np.abs(a - b))))
    return Verified(worst) if worst <= MARGINAL_TOL else Failed(worst)


# --------------------------------------------------------------------------
# Demos


def degenerate_demo() -> tuple[TruncatedSystem, np.ndarray]:
    """H = 0 on two levels, a population imbalance, and a flip coupling."""
    sys = TruncatedSystem(np.zeros((2, 2)), np.diag([1.0, 0.0]), np.diag([1.0, 0.0]))
    return sys, np.array([[0.0, 1.0], [1.0, 0.0]])


def rabi_demo() -> tuple[TruncatedSystem, np.ndarray]:
    sys = TruncatedSystem(np.diag([0.0, 1.0]), np.diag([1.0, 0.0]), np.diag([1.0, 0.0]))
    return sys, np.array([[0.0, 1.0], [1.0, 0.0]])


def rabi_expectation(lam: float, t):
    """Ground population of the Rabi problem above: ``1 - 4 lam^2 / (1 + 4 lam^2) sin^2(Omega t / 2)``."""
    omega = math.sqrt(1 + 4 * lam * lam)
    return 1 - 4 * lam * lam / (1 + 4 * lam * lam) * np.sin(omega * np.asarray(t) / 2) ** 2


def random_perturbation(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Hermitian matrix with unit operator norm."""
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    v = (a + a.conj().T) / 2
    return v / op_norm(v)


def gibbs_demo(energies: Sequence[float] = (0.0, 1.0, 2.0), beta: float = 1.0,
               rng: np.random.Generator | None = None) -> tuple[TruncatedSystem, np.ndarray]:
    """Gibbs state of a diagonal Hamiltonian with a random unit-norm perturbation.

    The observable is the ground-state projector, which commutes with H.
    """
    rng = rng or np.random.default_rng(0)
    e = np.asarray(energies, dtype=float)
    p = np.exp(-beta * (e - e.min()))
    rho = np.diag(p / p.sum())
    o = np.zeros((e.size, e.size))
    o[0, 0] = 1
    return TruncatedSystem(np.diag(e), rho, o), random_perturbation(e.size, rng)
