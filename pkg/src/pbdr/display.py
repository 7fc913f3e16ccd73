import math

SIGNIFICANT_DIGITS = 9


def format_real(value: float) -> str:
    """Nine significant digits, enough to tell single-precision drift apart."""
    value = float(value)
    if math.isnan(value):
        return "nan"
    return f"{value:.{SIGNIFICANT_DIGITS}g}"


def format_statistic(mean: float, std: float) -> str:
    return f"{format_real(mean)} +/- {format_real(std)}"
