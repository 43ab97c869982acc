"""Hypothesis strategies for exact energies and states."""
from fractions import Fraction

from hypothesis import strategies as st

from gibbsgate.energy import Basis, Energy
from gibbsgate.spectrum import Spectrum

SQRT = Basis.with_generators(r2=2 ** 0.5, r3=3 ** 0.5)

small_fractions = st.fractions(min_value=-20, max_value=20, max_denominator=12)
positive_fractions = st.fractions(min_value=Fraction(1, 12), max_value=20, max_denominator=12)
betas = st.fractions(min_value=Fraction(1, 16), max_value=4, max_denominator=16)


@st.composite
def energies(draw, basis=SQRT):
    coords = draw(st.lists(small_fractions, min_size=0, max_size=len(basis)))
    return Energy(coords, basis)


@st.composite
def rational_spectra(draw, min_levels=2, max_levels=8):
    gaps = draw(st.lists(positive_fractions, min_size=min_levels - 1, max_size=max_levels - 1))
    levels, acc = [Fraction(0)], Fraction(0)
    for g in gaps:
        acc += g
        levels.append(acc)
    return Spectrum.from_energies(levels)
