"""Utility methods for package."""

import importlib.metadata
from typing import Optional

import numpy as np

from cnoidal.models import DomainError

# Floats in CSV output carry enough digits to round-trip exactly.
FLOAT_FORMAT = "{:.17g}"


def get_package_version(package_name: str) -> Optional[str]:
    """
    Returns the package version by `package_name` using the importlib.metadata module
    which is available in Python 3.8 and later.
    """
    try:
        return importlib.metadata.version(package_name)
    except importlib.metadata.PackageNotFoundError:
        return None


def check_grid_size(n_points: int, minimum: int) -> None:
    """Grids are even-sized and at least `minimum` points"""
    if n_points < minimum or n_points % 2:
        raise DomainError(f"grid size N={n_points} must be even and >= {minimum}")


def uniform_grid(period: float, n_points: int) -> np.ndarray:
    """Left-closed uniform grid x_j = j L / N on [0, L)"""
    return period * np.arange(n_points) / n_points


def wavenumbers(period: float, n_points: int) -> np.ndarray:
    """Angular wavenumbers in numpy FFT order"""
    return 2.0 * np.pi * np.fft.fftfreq(n_points, d=period / n_points)


def l2_inner(f: np.ndarray, g: np.ndarray, period: float) -> float:
    """(f, g)_{L^2} by the rectangle rule with weight L/N (exact for periodic data)"""
    return float(np.real(np.vdot(g, f)) * period / f.shape[0])


def spectral_derivative(
    values: np.ndarray, period: float, order: int = 1
) -> np.ndarray:
    """Fourier-multiplier derivative of a periodic sample"""
    n_points = values.shape[0]
    multiplier = (1j * wavenumbers(period, n_points)) ** order
    if order % 2 == 1:
        # Nyquist mode has no odd derivative
        multiplier[n_points // 2] = 0.0
    derivative = np.fft.ifft(multiplier * np.fft.fft(values))
    if np.isrealobj(values):
        return np.real(derivative)
    return derivative


def format_float(value: float) -> str:
    """17 significant digits for bit-reproducible baselines"""
    return FLOAT_FORMAT.format(value)
