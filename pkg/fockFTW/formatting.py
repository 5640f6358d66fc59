"""
Number rendering for printed reports.

Rounding always goes through decimal with ROUND_HALF_UP so that a table
shows 0.0825 as 8.3% rather than the banker's 8.2%.
"""

import decimal


def _quantize(value, decimals):
    try:
        d = decimal.Decimal(str(value))
        quant = decimal.Decimal('1.' + '0' * decimals) if decimals > 0 else decimal.Decimal('1')
        return float(d.quantize(quant, rounding=decimal.ROUND_HALF_UP))
    except decimal.InvalidOperation:
        return round(float(value), decimals)


def format_number(number, style='default', decimals=None, prefix='', suffix=''):
    """
    Format a number (or list/tuple of numbers) with half-up rounding.

    Parameters:
        number: int, float, numpy float, or list/tuple of these.
        style: str, one of 'default', 'percent', 'signed' (default: 'default')
        decimals: int or None, decimal places (default: 4, or 1 for percent)
        prefix: str, prepended to the result
        suffix: str, appended to the result

    Returns:
        str or list/tuple of str

    Raises:
        TypeError: If an input is not a real number.
        ValueError: On an unknown style or negative decimals.

    Examples:
        >>> format_number(0.62, style='percent')
        '62.0%'
        >>> format_number(-0.08152, decimals=4)
        '-0.0815'
        >>> format_number(0.0251, style='signed', decimals=3)
        '+0.025'
    """
    if style not in ('default', 'percent', 'signed'):
        raise ValueError(f"Unknown style {style!r}")
    if decimals is None:
        decimals = 1 if style == 'percent' else 4
    if decimals < 0:
        raise ValueError("decimals must be non-negative")

    def _format_single(num):
        if isinstance(num, bool) or not isinstance(num, (int, float, decimal.Decimal)) and not hasattr(num, '__float__'):
            raise TypeError("Input must be a real number")
        val = float(num) * 100 if style == 'percent' else float(num)
        val = _quantize(val, decimals)
        if val == 0.0:
            val = 0.0  # no "-0.0"
        if style == 'percent':
            s = f"{val:.{decimals}f}%"
        elif style == 'signed':
            s = f"{val:+.{decimals}f}"
        else:
            s = f"{val:.{decimals}f}"
        return f"{prefix}{s}{suffix}"

    if isinstance(number, (list, tuple)):
        return type(number)(_format_single(x) for x in number)
    return _format_single(number)


def format_percent(value, sd=None, decimals=1):
    """
    Percentage with an optional bootstrap error, e.g. '62.0 ± 1.3%'.

    Examples:
        >>> format_percent(0.372)
        '37.2%'
        >>> format_percent(0.62, sd=0.0125)
        '62.0 ± 1.3%'
    """
    if sd is None:
        return format_number(value, style='percent', decimals=decimals)
    center = format_number(value, style='percent', decimals=decimals)[:-1]
    return f"{center} ± {format_number(sd, style='percent', decimals=decimals)}"
