import numpy as np
import pytest

from fockFTW.formatting import format_number, format_percent


class TestFormatNumber:

    def test_default_decimals(self):
        assert format_number(-0.08152) == "-0.0815"

    def test_half_up(self):
        assert format_number(1.005, decimals=2) == "1.01"
        assert format_number(0.0825, style='percent') == "8.3%"
        assert format_number(0.125, decimals=2) == "0.13"

    def test_no_negative_zero(self):
        assert format_number(-1e-9, decimals=3) == "0.000"

    def test_signed(self):
        assert format_number(0.0251, style='signed', decimals=3) == "+0.025"
        assert format_number(-0.0082, style='signed', decimals=4) == "-0.0082"

    def test_prefix_suffix(self):
        assert format_number(0.5, decimals=1, prefix="W=", suffix=" /pi") == "W=0.5 /pi"

    def test_numpy_and_sequences(self):
        assert format_number(np.float64(0.62), style='percent') == "62.0%"
        assert format_number([0.1, 0.2], decimals=1) == ["0.1", "0.2"]
        assert format_number((0.1,), decimals=1) == ("0.1",)

    def test_invalid_inputs(self):
        with pytest.raises(TypeError):
            format_number("0.5")
        with pytest.raises(TypeError):
            format_number(True)
        with pytest.raises(ValueError):
            format_number(0.5, style='engineering')
        with pytest.raises(ValueError):
            format_number(0.5, decimals=-1)


class TestFormatPercent:

    def test_plain(self):
        assert format_percent(0.372) == "37.2%"

    def test_with_sd(self):
        assert format_percent(0.62, sd=0.0125) == "62.0 ± 1.3%"

    def test_decimals(self):
        assert format_percent(0.40812, sd=0.00731, decimals=2) == "40.81 ± 0.73%"
