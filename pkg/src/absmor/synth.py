"""Seeded synthetic pencils with a controllable number of poles in a window.

Random numbers come from NumPy's ``PCG64`` bit generator seeded with
``SynthSpec.seed``; draws happen in this order:

1. ``n_in = round(f * n)`` in-window gaps, ``uniform(omega_min, omega_max)``;
2. ``n - n_in`` out-of-window gaps, uniform on ``gap_range`` minus the window;
3. a permutation of the ``n`` gaps;
4. an ``n x n`` ``uniform(-1, 1)`` matrix for ``A``'s coupling (upper triangle
   used), then one for ``B``;
5. an ``n x 3`` standard normal dipole block.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .pencil import DipoleBlock, build_pencil


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of a synthetic TD-HF-like problem of size ``n = n_occ * n_virt``.

    Couplings are ``g * (hi - lo) / n`` times a symmetric ``uniform(-1, 1)``
    matrix, so the spectrum stays close to the diagonal gaps.
    """

    n_occ: int = 5
    n_virt: int = 40
    gap_range: tuple = (8.0, 24.0)
    window: tuple = (10.0, 20.0)
    g: float = 0.05
    f: float = 0.3
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "gap_range", tuple(float(x) for x in self.gap_range))
        object.__setattr__(self, "window", tuple(float(x) for x in self.window))
        if self.n_occ < 1 or self.n_virt < 1:
            raise ValueError("n_occ and n_virt must be positive")
        if self.g < 0:
            raise ValueError("coupling g must be nonnegative")
        if not 0 <= self.f <= 1:
            raise ValueError("density fraction f must lie in [0, 1]")
        lo, hi = self.gap_range
        wlo, whi = self.window
        if not (0 < lo < hi and wlo < whi):
            raise ValueError("need 0 < gap_range[0] < gap_range[1] and a nonempty window")
        if self.n_outside > 0 and self._outside_measure() <= 0:
            raise ValueError("gap_range has no room outside the window")

    @property
    def n(self):
        return self.n_occ * self.n_virt

    @property
    def n_inside(self):
        return int(round(self.f * self.n))

    @property
    def n_outside(self):
        return self.n - self.n_inside

    def _outside_pieces(self):
        lo, hi = self.gap_range
        wlo, whi = self.window
        left = (lo, min(hi, wlo))
        right = (max(lo, whi), hi)
        return [(a, b) for a, b in (left, right) if b > a]

    def _outside_measure(self):
        return sum(b - a for a, b in self._outside_pieces())

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class SynthProblem:
    spec: SynthSpec
    pencil: object
    dipoles: DipoleBlock
    gaps: np.ndarray
    boost: float

    def spec_json(self, **kw):
        out = self.spec.to_dict()
        out["gap_range"] = list(out["gap_range"])
        out["window"] = list(out["window"])
        out.update({"n": self.spec.n, "boost": self.boost, "rng": "numpy.random.PCG64"})
        return json.dumps(out, **kw)


def _sym_uniform(rng, n):
    U = rng.uniform(-1.0, 1.0, size=(n, n))
    return np.triu(U) + np.triu(U, 1).T


def generate(spec):
    """Build the synthetic pencil and dipoles described by ``spec``.

    If ``M`` or ``K`` comes out indefinite, ``A`` gets a diagonal boost of
    ``|min eig| + 0.01 * (max gap - min gap)``; the boost is recorded.
    """
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    n = spec.n
    wlo, whi = spec.window
    inside = rng.uniform(wlo, whi, size=spec.n_inside)
    pieces = spec._outside_pieces()
    u = rng.uniform(0.0, spec._outside_measure(), size=spec.n_outside) if pieces else np.zeros(0)
    outside = np.empty_like(u)
    offset = 0.0
    for a, b in pieces:
        sel = (u >= offset) & (u < offset + (b - a))
        outside[sel] = a + (u[sel] - offset)
        offset += b - a
    if pieces:
        outside[u >= offset] = pieces[-1][1]
    gaps = rng.permutation(np.concatenate([inside, outside]))

    lo, hi = spec.gap_range
    c = spec.g * (hi - lo) / n
    RA = _sym_uniform(rng, n)
    RB = _sym_uniform(rng, n)
    A = np.diag(gaps) + c * RA
    B = c * RB
    d = rng.standard_normal((n, 3))

    boost = 0.0
    lo_eig = min(np.linalg.eigvalsh(A + B)[0], np.linalg.eigvalsh(A - B)[0])
    if lo_eig <= 0:
        boost = abs(lo_eig) + 0.01 * (gaps.max() - gaps.min())
        A = A + boost * np.eye(n)
    p = build_pencil(A, B, check_spd=True)
    return SynthProblem(spec, p, DipoleBlock(d), gaps, float(boost))
