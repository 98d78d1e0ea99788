import numpy as np
import pytest

from lambda_emission.analysis import Spectrum
from lambda_emission.errors import ConfigError
from lambda_emission.io import read_json, read_spectrum_csv, read_trace, write_json, write_spectrum_csv, write_trace
from lambda_emission.model import FrequencyGrid


def test_spectrum_csv_keeps_full_precision(tmp_path):
    grid = FrequencyGrid(-1.0, 1.0, 5)
    spectrum = Spectrum(grid, [0.1, 1.0 / 3.0, 0.7, 2.0 ** -40, 0.0], {"family": "fock"})
    path = write_spectrum_csv(spectrum, str(tmp_path / "s.csv"), {"gbar": "0.25", "alpha": "20.0"})
    lines = open(path).read().splitlines()
    assert lines[:2] == ["# alpha=20.0", "# family=fock"]
    assert "detuning,intensity" in lines
    restored = read_spectrum_csv(path)
    np.testing.assert_array_equal(restored.values, spectrum.values)
    assert restored.grid == grid
    assert restored.meta["gbar"] == "0.25"


def test_spectrum_csv_errors(tmp_path):
    with pytest.raises(ConfigError):
        read_spectrum_csv(str(tmp_path / "missing.csv"))
    bad = tmp_path / "bad.csv"
    bad.write_text("x,y\n0,1\n1,2\n")
    with pytest.raises(ConfigError):
        read_spectrum_csv(str(bad))


def test_json_is_sorted_and_numpy_aware(tmp_path):
    path = write_json({"b": np.float64(0.5), "a": np.arange(3), "c": (1, 2)}, str(tmp_path / "r.json"))
    text = open(path).read()
    assert text.index('"a"') < text.index('"b"') < text.index('"c"')
    assert read_json(path) == {"a": [0, 1, 2], "b": 0.5, "c": [1, 2]}


def test_trace_csv(tmp_path):
    times = np.linspace(0.0, 1.0, 11)
    path = write_trace(times, np.exp(-times), str(tmp_path / "nested" / "trace.csv"))
    t, population = read_trace(path)
    np.testing.assert_array_equal(t, times)
    np.testing.assert_array_equal(population, np.exp(-times))
