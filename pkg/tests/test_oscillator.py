import math
from fractions import Fraction

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from gibbsgate.constraints import DivergentDirection, brute_force_oracle
from gibbsgate.energy import NEG_INF, POS_INF, Basis, Energy
from gibbsgate.errors import InvalidInput, UnsupportedAttackPair
from gibbsgate.oscillator import (
    ApproximateInstability,
    GibbsCertificate,
    InstabilityCertificate,
    PairConsistent,
    StructureViolation,
    VanishingCertificate,
    attack_pair,
    choose_pq,
    lifted_system,
    multimode_spectrum,
    oscillator_spectrum,
    project_lifted,
    refute_gibbs,
    simplest_between,
)
from gibbsgate.spectrum import LogState, Spectrum, gibbs_state

from strategies import betas, positive_fractions, rational_spectra

S3 = Spectrum.from_energies([0, 1, 2])
R2 = Basis.with_generators(r2=math.sqrt(2))


def test_oscillator_ladders():
    assert [e.rational for e in oscillator_spectrum(1, 3).energies] == [Fraction(1, 2), Fraction(3, 2), Fraction(5, 2)]
    assert [e.rational for e in oscillator_spectrum(2, 2).energies] == [1, 3]
    ladder = oscillator_spectrum(R2.gen("r2"), 2)
    assert [e.coords for e in ladder.energies] == [(0, Fraction(1, 2)), (0, Fraction(3, 2))]
    with pytest.raises(InvalidInput):
        oscillator_spectrum(-1, 3)
    with pytest.raises(InvalidInput):
        oscillator_spectrum(0, 3)


def test_multimode_examples():
    m = multimode_spectrum([1, 1], [2, 2])
    assert sorted(e.rational for e in m.energies) == [1, 2, 2, 3]
    assert m.indices == ((0, 0), (0, 1), (1, 0), (1, 1))
    assert min(multimode_spectrum([2, 1, 1], [1, 1, 2]).energies) == 2
    m = multimode_spectrum([R2.energy(1), R2.gen("r2")], [2, 2])
    assert len(set(m.energies)) == 4
    with pytest.raises(InvalidInput):
        multimode_spectrum([], [])
    with pytest.raises(InvalidInput):
        multimode_spectrum([1, 1, 1, 1], [1, 1, 1, 1])


@given(st.lists(positive_fractions, min_size=1, max_size=3), st.data())
def test_multimode_energy_is_exact_coordinate_sum(freqs, data):
    truncs = data.draw(st.lists(st.integers(1, 4), min_size=len(freqs), max_size=len(freqs)))
    m = multimode_spectrum(freqs, truncs)
    for idx, e in zip(m.indices, m.energies):
        assert e == sum(w * (n + Fraction(1, 2)) for w, n in zip(freqs, idx))
        assert m.flat_index(idx) == m.indices.index(idx)


@pytest.mark.parametrize("args, expected", [
    ((2, 1, 2, 1), (1, 3)),
    ((1, 1, 3, 2), (3, 4)),
    ((1, 1, 1, 1), None),
    ((3, 1, 2, 1), (1, 4)),
])
def test_choose_pq_examples(args, expected):
    assert choose_pq(*args) == expected


def test_choose_pq_errors():
    with pytest.raises(InvalidInput):
        choose_pq(1, 1, 1, 2)
    with pytest.raises(UnsupportedAttackPair):
        choose_pq(R2.gen("r2"), R2.energy(1), 2, 1)


def _brute_simplest(lo: Fraction, hi: Fraction) -> Fraction:
    p = 1
    while True:
        q = math.floor(lo * p) + 1
        if Fraction(q, p) < hi:
            return Fraction(q, p)
        p += 1


@given(positive_fractions, positive_fractions, betas, betas)
def test_choose_pq_matches_minimal_denominator_search(w1, w2, b1, b2):
    assume(b1 != b2)
    bn, bm = max(b1, b2), min(b1, b2)
    p, q = choose_pq(w1, w2, bn, bm)
    r = w1 / w2
    assert Fraction(q, p) == _brute_simplest(r, r * bn / bm)
    assert math.gcd(p, q) == 1
    assert r < Fraction(q, p) < r * bn / bm


@given(st.fractions(min_value=0, max_value=50, max_denominator=30),
       st.fractions(min_value=Fraction(1, 30), max_value=5, max_denominator=30))
def test_simplest_between_is_inside(lo, width):
    x = simplest_between(lo, lo + width)
    assert lo < x < lo + width
    assert x == _brute_simplest(lo, lo + width)


def test_attack_pair_examples():
    cert = attack_pair(S3, LogState((0, -1, -4)), 2, 1)
    assert (cert.n, cert.m, cert.p, cert.q) == (2, 1, 1, 3)
    assert cert.omega1 == 2 and cert.omega2 == 1 and cert.omega3 == 1 and cert.log_s == 1
    assert cert.recheck() == []
    assert isinstance(attack_pair(S3, LogState((0, -1, -2)), 2, 1), PairConsistent)
    s = Spectrum.from_energies([0, 1, 3])
    cert = attack_pair(s, LogState((0, -1, -6)), 2, 1)
    assert (cert.p, cert.q, cert.omega1, cert.omega3, cert.log_s) == (1, 4, 3, 1, 2)
    with pytest.raises(InvalidInput):
        attack_pair(S3, LogState((0, -1, -4)), 1, 1)


def test_attack_pair_orders_the_pair():
    cert = attack_pair(S3, LogState((0, -1, -4)), 1, 2)
    assert (cert.n, cert.m) == (2, 1)


def test_certificate_json_shape():
    cert = refute_gibbs(S3, LogState((0, -1, -4)))
    js = cert.to_json()
    assert {k: js[k] for k in ("type", "pair", "p", "q", "omega3", "log_s")} == {
        "type": "instability", "pair": [2, 1], "p": 1, "q": 3, "omega3": ["1"], "log_s": "1"}


def test_refute_examples():
    assert refute_gibbs(S3, gibbs_state(S3, 1)) == GibbsCertificate(1)
    assert refute_gibbs(S3, LogState((0, NEG_INF, NEG_INF))) == GibbsCertificate(POS_INF)
    assert isinstance(refute_gibbs(S3, LogState((0, 1, -4))), StructureViolation)


def test_refute_partial_support_gives_vanishing_certificate():
    cert = refute_gibbs(S3, LogState((0, -1, NEG_INF)))
    assert isinstance(cert, VanishingCertificate)
    assert (cert.n, cert.m) == (2, 1)
    assert cert.recheck() == []


def test_refute_irrational_pair_is_approximate():
    s = Spectrum.from_energies([R2.energy(0), R2.energy(1), R2.gen("r2")], R2)
    state = LogState((Energy(0), R2.energy(-1), R2.gen("r2") * -3))
    cert = refute_gibbs(s, state)
    assert isinstance(cert, ApproximateInstability)
    assert cert.log_s > 0 and cert.omega3 > 0


def _non_gibbs(spec, bs):
    return LogState(tuple([Fraction(0)] + [-b * spec.gap(n).rational for n, b in enumerate(bs, 1)]))


@given(rational_spectra(min_levels=3, max_levels=6), st.data())
def test_certificate_soundness(spec, data):
    bs = data.draw(st.lists(betas, min_size=len(spec) - 1, max_size=len(spec) - 1))
    state = _non_gibbs(spec, bs)
    cert = refute_gibbs(spec, state)
    if isinstance(cert, InstabilityCertificate):
        assert cert.recheck() == []
        assert math.gcd(cert.p, cert.q) == 1 and cert.omega3 > 0 and cert.log_s > 0
    elif isinstance(cert, GibbsCertificate):
        assert len(set(bs)) == 1
    else:
        assert isinstance(cert, StructureViolation)


@given(rational_spectra(), betas)
def test_completeness_on_gibbs_inputs(spec, beta):
    assert refute_gibbs(spec, gibbs_state(spec, beta)) == GibbsCertificate(beta)


@given(rational_spectra(min_levels=3, max_levels=5), st.data(),
       st.fractions(min_value=Fraction(1, 5), max_value=5, max_denominator=5))
def test_scaling_covariance(spec, data, c):
    bs = data.draw(st.lists(betas, min_size=len(spec) - 1, max_size=len(spec) - 1))
    state = _non_gibbs(spec, bs)
    cert = refute_gibbs(spec, state)
    assume(isinstance(cert, InstabilityCertificate))
    scaled = refute_gibbs(spec.scaled(c), LogState(tuple(state.logp)))
    assert (scaled.p, scaled.q) == (cert.p, cert.q)
    assert scaled.log_s == cert.log_s
    assert scaled.beta_n == cert.beta_n / c


@pytest.mark.parametrize("levels, logp", [([0, 1, 2], (0, -1, -4)), ([0, 1, 3], (0, -1, -6)),
                                          ([0, 2, 3], (0, -1, -6))])
def test_attack_agrees_with_oracle(levels, logp):
    spec = Spectrum.from_energies(levels)
    cert = refute_gibbs(spec, LogState(logp))
    sys_spec, sys_state, env = lifted_system(cert)
    verdict = brute_force_oracle(sys_spec, sys_state, env)
    assert isinstance(verdict, DivergentDirection) and verdict.mode == 2
    assert project_lifted(verdict.rate, cert) == cert.log_s
