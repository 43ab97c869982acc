import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gibbsgate.energy import NEG_INF, POS_INF, Basis, Energy
from gibbsgate.errors import InvalidInput
from gibbsgate.spectrum import (
    Gibbs,
    GrowthFamily,
    LogState,
    NotGibbs,
    Passive,
    PassivityViolation,
    Spectrum,
    TraceVerdict,
    beta_profile,
    check_passivity,
    check_trace_class,
    gibbs_state,
    is_function_of_hamiltonian,
    is_gibbs,
    partition_function,
)

from strategies import betas, rational_spectra, small_fractions

S3 = Spectrum.from_energies([0, 1, 2])


# trace class


def test_linear_family_is_trace_class_with_zero_beta0():
    rep = check_trace_class(GrowthFamily.linear(1, 0), Fraction(1, 2))
    assert rep.verdict is TraceVerdict.TRACE_CLASS
    assert rep.beta0_estimate == 0


@pytest.mark.parametrize("beta, verdict", [(Fraction(1, 2), TraceVerdict.NOT_TRACE_CLASS),
                                           (2, TraceVerdict.TRACE_CLASS),
                                           (1, TraceVerdict.NOT_TRACE_CLASS)])
def test_logarithmic_family(beta, verdict):
    assert check_trace_class(GrowthFamily.logarithmic(1), beta).verdict is verdict


def test_bounded_family_is_not_trace_class():
    assert check_trace_class(GrowthFamily.bounded(5), 10).verdict is TraceVerdict.NOT_TRACE_CLASS


def test_callback_family_estimates_beta0():
    rep = check_trace_class(GrowthFamily.custom(lambda n: 2 * math.log(n + 1)), 1, window=4096)
    assert rep.verdict is TraceVerdict.INCONCLUSIVE
    assert rep.beta0_estimate == pytest.approx(0.5, abs=0.01)


def test_trace_class_input_errors():
    with pytest.raises(InvalidInput):
        check_trace_class(GrowthFamily.linear(1), 0)
    with pytest.raises(InvalidInput):
        check_trace_class(GrowthFamily.custom(lambda n: -n), 1)
    with pytest.raises(InvalidInput):
        check_trace_class(GrowthFamily.custom(lambda n: n), 1, window=8)
    with pytest.raises(InvalidInput):
        GrowthFamily.linear(-1)
    with pytest.raises(InvalidInput):
        GrowthFamily.logarithmic(0)


def test_partition_function_example():
    assert partition_function(S3, math.log(2)).value == pytest.approx(1.75, rel=1e-15)
    assert not partition_function(S3, 1).tail_bound_asserted


# spectra and states


def test_spectrum_merges_duplicates_and_sorts():
    s = Spectrum.from_energies([2, 0, 1, 1])
    assert [e.rational for e in s.energies] == [0, 1, 2]
    assert [l.mult for l in s.levels] == [1, 2, 1]
    assert s.total_multiplicity == 4


def test_spectrum_rejects_unsorted_levels():
    from gibbsgate.spectrum import Level

    with pytest.raises(InvalidInput):
        Spectrum((Level(Energy(1)), Level(Energy(0))))


def test_spectrum_json_round_trip_with_generators():
    b = Basis.with_generators(r2=math.sqrt(2))
    s = Spectrum.from_energies([b.energy(0), b.energy(1), b.gen("r2")], b)
    back = Spectrum.from_json(s.to_json())
    assert back.energies == s.energies and back.basis == s.basis


def test_logstate_needs_a_finite_entry():
    with pytest.raises(InvalidInput):
        LogState((NEG_INF, NEG_INF))


def test_beta_profile_examples():
    prof = beta_profile(LogState((0, -1, -4)), S3)
    assert prof.betas == {1: 1, 2: 2}
    prof = beta_profile(LogState((0, NEG_INF, NEG_INF)), S3)
    assert prof.betas == {1: POS_INF, 2: POS_INF}


def test_beta_profile_flags_irrational_ratios():
    b = Basis.with_generators(r2=math.sqrt(2))
    s = Spectrum.from_energies([b.energy(0), b.energy(1)], b)
    prof = beta_profile(LogState((0, b.gen("r2") * -1)), s)
    assert prof.approximate == {1}
    assert prof.betas[1] == pytest.approx(math.sqrt(2))


def test_passivity():
    assert isinstance(check_passivity(LogState((0, -1, -4)), S3), Passive)
    assert isinstance(check_passivity(LogState((0, -1, NEG_INF)), S3), Passive)
    v = check_passivity(LogState((0, 1, -4)), S3)
    assert isinstance(v, PassivityViolation) and (v.n, v.m) == (0, 1)
    v = check_passivity(LogState((0, NEG_INF, -4)), S3)
    assert isinstance(v, PassivityViolation)


def test_is_gibbs_examples():
    assert is_gibbs(gibbs_state(S3, 1), S3) == Gibbs(1)
    assert is_gibbs(LogState((0, NEG_INF, NEG_INF)), S3) == Gibbs(POS_INF)
    assert isinstance(is_gibbs(LogState((0, -1, -4)), S3), NotGibbs)
    assert isinstance(is_gibbs(LogState((0, -1, NEG_INF)), S3), NotGibbs)


def test_function_of_hamiltonian():
    s = Spectrum.from_energies([0, 1, 1, 2])
    assert is_function_of_hamiltonian([Fraction(1, 2), Fraction(1, 8), Fraction(1, 8), Fraction(1, 4)], s)
    assert not is_function_of_hamiltonian([Fraction(1, 2), Fraction(1, 8), Fraction(1, 4), Fraction(1, 8)], s)
    with pytest.raises(InvalidInput):
        is_function_of_hamiltonian([1, 2], s)


@given(rational_spectra(), betas)
def test_gibbs_states_are_recognized_exactly(spec, beta):
    state = gibbs_state(spec, beta)
    assert is_gibbs(state, spec) == Gibbs(beta)
    assert all(b == beta for b in beta_profile(state, spec).betas.values())


@given(rational_spectra(min_levels=3), st.lists(betas, min_size=7, max_size=7), small_fractions)
def test_verdicts_invariant_under_normalization(spec, bs, shift):
    state = LogState(tuple([Fraction(0)] + [-b * spec.gap(n).rational for n, b in zip(range(1, len(spec)), bs)]))
    moved = state.shifted(shift)
    assert is_gibbs(state, spec) == is_gibbs(moved, spec)
    assert check_passivity(state, spec) == check_passivity(moved, spec)
    assert beta_profile(state, spec) == beta_profile(moved, spec)


@given(rational_spectra(), betas)
def test_populations_are_normalized(spec, beta):
    pops = gibbs_state(spec, beta).populations()
    assert math.fsum(pops) == pytest.approx(1, abs=1e-12)
    assert all(a >= b for a, b in zip(pops, pops[1:]))
