import math

import pytest

from lambda_emission.analysis import spectra_sum
from lambda_emission.model import FrequencyGrid
from lambda_emission.references import (EXPECTED_TABLE, ReferenceCatalogue, expected_letter, letter_for_phase_sum,
                                        table_cells)

GRID = FrequencyGrid(-20.0, 20.0, 801)


@pytest.fixture
def catalogue(base_params):
    return ReferenceCatalogue(base_params, 5.0, GRID)


def test_table_follows_phase_sum():
    cells = table_cells()
    assert len(cells) == 9
    for row, col, phi_alpha, phi in cells:
        assert expected_letter(col, row) == letter_for_phase_sum(phi + phi_alpha)
    assert expected_letter(2, 0) == expected_letter(0, 2) == "c"
    assert EXPECTED_TABLE[2][2] == "a"


def test_phase_sum_wraps():
    assert letter_for_phase_sum(2 * math.pi) == "a"
    assert letter_for_phase_sum(-0.5 * math.pi) == "d"
    assert letter_for_phase_sum(2.5 * math.pi + 0.1) == "b"


def test_catalogue_contents(catalogue):
    assert catalogue.letters() == ["a", "b", "c", "d"]
    assert catalogue.get_reference("c").phi_c == pytest.approx(math.pi)
    assert catalogue.spectra["b"].meta["phi_c"] == pytest.approx(0.5 * math.pi)
    with pytest.raises(KeyError):
        catalogue.get_reference("e")


def test_reference_matches_itself(catalogue):
    match = catalogue.match(catalogue.spectra["d"])
    assert match.letter == "d"
    assert match.l2_rel == 0
    assert match.margin == math.inf
    assert set(match.distances) == {"a", "b", "c", "d"}


def test_midway_spectrum_is_ambiguous(catalogue):
    blend = spectra_sum([catalogue.spectra["a"], catalogue.spectra["c"]], [0.5, 0.5])
    match = catalogue.match(blend)
    assert match.letter is None
    assert match.margin < 2.0
