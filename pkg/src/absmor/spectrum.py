"""Frequency grids, sampled spectra and their CSV form."""

from __future__ import annotations

import csv
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class FrequencyGrid:
    """``N`` equispaced frequencies on ``[omega_min, omega_max]`` with damping ``eta``."""

    omega_min: float
    omega_max: float
    N: int = 1000
    eta: float = 1.0

    def __post_init__(self):
        if not self.omega_min < self.omega_max:
            raise ValueError(f"empty window [{self.omega_min}, {self.omega_max}]")
        if self.N < 2:
            raise ValueError("grid needs at least 2 points")
        if self.eta < 0:
            raise ValueError("damping must be nonnegative")

    @property
    def omegas(self):
        return np.linspace(self.omega_min, self.omega_max, self.N)

    @property
    def width(self):
        return self.omega_max - self.omega_min


@dataclass
class SpectrumResult:
    """Sampled ``sigma(omega)`` in arbitrary units, plus run diagnostics.

    ``tensors`` holds the ``(N, 3, 3)`` complex polarizabilities when kept.
    """

    omegas: np.ndarray
    sigma: np.ndarray
    tensors: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.omegas = np.asarray(self.omegas, dtype=np.float64)
        self.sigma = np.asarray(self.sigma, dtype=np.float64)
        if self.omegas.shape != self.sigma.shape or self.omegas.ndim != 1:
            raise ValueError("omegas and sigma must be 1-D of equal length")

    def normalized(self):
        return normalize(self.sigma)


def sigma_from_tensors(omegas, tensors):
    """``omega * Im tr alpha`` for a stack of ``(N, 3, 3)`` tensors."""
    return np.asarray(omegas) * np.trace(tensors, axis1=1, axis2=2).imag


def normalize(sigma):
    """Divide by the largest absolute value; an all-zero spectrum stays zero."""
    sigma = np.asarray(sigma, dtype=np.float64)
    peak = np.max(np.abs(sigma)) if sigma.size else 0.0
    return sigma / peak if peak > 0 else sigma.copy()


def normalized_difference(a, b):
    """Max-abs difference of two self-normalized spectra and its index."""
    diff = np.abs(normalize(a) - normalize(b))
    i = int(np.argmax(diff))
    return float(diff[i]), i


def _atomic_write(path, write):
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            write(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, columns, header):
    """Write equal-length numeric columns with 17 significant digits, atomically."""
    cols = [np.asarray(c, dtype=np.float64) for c in columns]

    def write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in zip(*cols):
            w.writerow([f"{v:.17g}" for v in row])

    _atomic_write(path, write)


def read_csv(path):
    """Read a numeric CSV; returns ``(header, columns)``."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=np.float64)
    data = data.reshape(-1, len(header))
    return header, [data[:, j] for j in range(len(header))]


def write_spectrum_csv(path, result):
    write_csv(path, [result.omegas, result.sigma], ["omega", "sigma"])


def read_spectrum_csv(path):
    header, cols = read_csv(path)
    if header[:2] != ["omega", "sigma"]:
        raise ValueError(f"{path}: expected header 'omega,sigma', got {','.join(header)}")
    return SpectrumResult(omegas=cols[0], sigma=cols[1])
