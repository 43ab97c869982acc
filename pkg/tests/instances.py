"""Seeded random instances shared by the property and acceptance tests."""
from __future__ import annotations

import math
import os
import random
from fractions import Fraction

from gibbsgate.energy import NEG_INF, Basis, Energy
from gibbsgate.oscillator import multimode_spectrum
from gibbsgate.spectrum import LogState, Spectrum, check_passivity, Passive

SEED = int(os.environ.get("GIBBSGATE_SEED", "20240601"))


def rng(salt: int = 0) -> random.Random:
    return random.Random(SEED * 1_000_003 + salt)


def rational(r: random.Random, lo: Fraction, hi: Fraction, max_den: int = 4) -> Fraction:
    """Uniform-ish rational in the open interval (lo, hi)."""
    while True:
        den = r.randint(1, max_den)
        num = r.randint(math.floor(lo * den), math.ceil(hi * den))
        x = Fraction(num, den)
        if lo < x < hi:
            return x


def rational_spectrum(r: random.Random, n_min=3, n_max=8, max_gap=20) -> Spectrum:
    n = r.randint(n_min, n_max)
    levels = {Fraction(0)}
    while len(levels) < n:
        levels.add(rational(r, Fraction(0), Fraction(max_gap)))
    return Spectrum.from_energies(sorted(levels))


def gibbs_instance(r: random.Random):
    spec = rational_spectrum(r)
    beta = rational(r, Fraction(0), Fraction(4), max_den=8)
    if r.random() < 0.1:
        beta = Fraction(4)
    return spec, beta


def passive_non_gibbs(r: random.Random, n_min=3, n_max=8):
    """Passive state with exact rational betas, not all equal."""
    while True:
        spec = rational_spectrum(r, n_min, n_max)
        betas = [rational(r, Fraction(0), Fraction(4)) for _ in range(len(spec) - 1)]
        if len(set(betas)) == 1:
            continue
        logp = [Fraction(0)] + [-b * e.rational for b, e in zip(betas, spec.energies[1:])]
        state = LogState(tuple(logp))
        if isinstance(check_passivity(state, spec), Passive):
            return spec, state


def env_instance(r: random.Random, max_joint: int = 10_000):
    """Small system with a multimode environment, sized for the elimination oracle."""
    irr = Basis.with_generators(g=math.sqrt(2) + 0.1 * r.random())
    g = irr.gen("g")
    n = r.randint(2, 4)
    levels = {Fraction(0)}
    while len(levels) < n:
        levels.add(rational(r, Fraction(0), Fraction(6), max_den=2))
    energies = [Energy(e, irr) for e in sorted(levels)]
    if r.random() < 0.2:
        energies.append(energies[-1] + g)
    spec = Spectrum.from_energies(energies, irr)

    kind = r.random()
    beta = rational(r, Fraction(0), Fraction(3))
    logp = [-(e * beta) for e in spec.energies]
    if kind < 0.35:
        pass
    elif kind < 0.75:
        # perturb one level while keeping passivity
        i = r.randrange(1, len(spec))
        for _ in range(20):
            cand = logp[:i] + [logp[i] - rational(r, Fraction(-1), Fraction(1))] + logp[i + 1:]
            if isinstance(check_passivity(LogState(tuple(cand)), spec), Passive):
                logp = cand
                break
    else:
        cut = r.randrange(1, len(spec))
        logp = logp[:cut] + [NEG_INF] * (len(spec) - cut)
    state = LogState(tuple(logp))

    if r.random() < 0.3:
        attacked = _attack_env(spec, state, max_joint)
        if attacked is not None:
            return attacked

    gaps = [spec.gap(i) for i in range(1, len(spec))]
    modes = r.randint(1, 3)
    freqs = []
    for _ in range(modes):
        c = r.random()
        if c < 0.6:
            freqs.append(r.choice(gaps) / r.randint(1, 3))
        elif c < 0.85:
            freqs.append(Energy(rational(r, Fraction(0), Fraction(3), max_den=3), irr))
        else:
            freqs.append(g / r.randint(1, 2))
    budget = max_joint // len(spec)
    while True:
        truncs = [r.randint(2, 8) for _ in range(modes)]
        if math.prod(truncs) <= budget:
            break
    return spec, state, multimode_spectrum(freqs, truncs, irr)


def _attack_env(spec, state, max_joint):
    """The three-mode environment of an instability certificate, if one fits."""
    from gibbsgate.oscillator import InstabilityCertificate, lifted_system, refute_gibbs

    cert = refute_gibbs(spec, state)
    if not isinstance(cert, InstabilityCertificate):
        return None
    if 9 * (cert.p + 2) * (cert.q + 2) <= max_joint and cert.p + cert.q < 12:
        if (cert.p + cert.q) % 2:
            return lifted_system(cert)
        env = multimode_spectrum([cert.omega1, cert.omega2, cert.omega3], (cert.p + 2, cert.q + 2, 3), spec.basis)
        if len(spec) * len(env) <= max_joint:
            return spec, state, env
    return None
