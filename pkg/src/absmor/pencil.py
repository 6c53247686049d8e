"""Structured linear-response pencil and the exact operator applications.

The pencil is stored through its ``A`` and ``B`` blocks together with the
half-dimension matrices ``M = A + B`` and ``K = A - B``.  Every product of an
``n x n`` matrix with a block of vectors is tallied on a shared
:class:`GemmCounter` so that solver costs can be compared in a
hardware-neutral way.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np

SYMMETRY_RTOL = 1e-12


class PencilError(ValueError):
    """Raised for malformed pencil or dipole input."""


class GemmCounter:
    """Thread-safe tally of matrix-times-block products."""

    def __init__(self):
        self._count = 0
        self._lock = threading.Lock()

    def add(self, k=1):
        with self._lock:
            self._count += k

    @property
    def count(self):
        return self._count

    def reset(self):
        with self._lock:
            self._count = 0


def matmul(A, X):
    """Real matrix times real or complex block without upcasting ``A``.

    A complex C-contiguous block is reinterpreted as a real block of twice the
    width, so one real GEMM does the work of a complex one.
    """
    if np.iscomplexobj(X):
        X = np.ascontiguousarray(X, dtype=np.complex128)
        if X.ndim == 1:
            return matmul(A, X[:, None])[:, 0]
        Y = A @ X.view(np.float64)
        return Y.view(np.complex128)
    return A @ X


@dataclass(frozen=True, eq=False)
class ResponsePencil:
    """The matrices defining ``H - w S`` with ``H = [[A, B], [B, A]]``.

    Attributes
    ----------
    A, B : ndarray, shape (n, n)
        Real symmetric blocks.
    M, K : ndarray, shape (n, n)
        ``A + B`` and ``A - B``.
    spd_checked : bool
        True when ``M`` and ``K`` were verified positive definite.
    """

    A: np.ndarray
    B: np.ndarray
    M: np.ndarray
    K: np.ndarray
    spd_checked: bool = False
    gemms: GemmCounter = field(default_factory=GemmCounter, repr=False)

    @property
    def n(self):
        return self.A.shape[0]


@dataclass(frozen=True)
class DipoleBlock:
    """The ``n x 3`` block of dipole vectors ``(d_x, d_y, d_z)``."""

    d_tilde: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.d_tilde, dtype=np.float64)
        if d.ndim == 1:
            d = d[:, None]
        if d.ndim != 2 or d.shape[1] != 3:
            raise PencilError(f"dipole block must have 3 columns, got shape {d.shape}")
        if not np.all(np.isfinite(d)):
            raise PencilError("dipole block contains non-finite entries")
        d.setflags(write=False)
        object.__setattr__(self, "d_tilde", d)

    @property
    def n(self):
        return self.d_tilde.shape[0]

    def stacked(self):
        """The full-space right-hand side ``[d; d]`` of height ``2n``."""
        return np.vstack([self.d_tilde, self.d_tilde])


@dataclass(frozen=True)
class ComplexShift:
    """A frequency ``omega`` with damping ``eta``; ``value = omega + i eta``."""

    omega: float
    eta: float = 0.0

    def __post_init__(self):
        if self.eta < 0:
            raise ValueError("damping must be nonnegative")

    @property
    def value(self):
        return complex(self.omega, self.eta)

    @property
    def is_real(self):
        return self.eta == 0.0


def _check_symmetric(X, name):
    scale = np.max(np.abs(X)) if X.size else 0.0
    asym = np.max(np.abs(X - X.T)) if X.size else 0.0
    if asym > SYMMETRY_RTOL * max(scale, np.finfo(float).tiny):
        raise PencilError(f"{name} is not symmetric (max asymmetry {asym:.3e})")


def _min_eig(X):
    return np.linalg.eigvalsh(X)[0]


def build_pencil(A, B, check_spd=False):
    """Build a :class:`ResponsePencil` from the ``A`` and ``B`` blocks.

    Parameters
    ----------
    A, B : array_like, shape (n, n)
        Real symmetric matrices.
    check_spd : bool, default False
        Verify that ``M = A + B`` and ``K = A - B`` are positive definite.
        Costs two dense symmetric eigenvalue computations.

    Raises
    ------
    PencilError
        On shape mismatch, asymmetry beyond ``1e-12`` relative to the largest
        entry, or (with ``check_spd``) an indefinite ``M`` or ``K``.
    """
    A = np.array(A, dtype=np.float64)
    B = np.array(B, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise PencilError(f"A must be square, got shape {A.shape}")
    if B.shape != A.shape:
        raise PencilError(f"A and B differ in shape: {A.shape} vs {B.shape}")
    if A.shape[0] < 1:
        raise PencilError("empty pencil")
    _check_symmetric(A, "A")
    _check_symmetric(B, "B")
    M = A + B
    K = A - B
    if check_spd:
        for name, X in (("M", M), ("K", K)):
            lo = _min_eig(X)
            if lo <= 0:
                raise PencilError(f"{name} is not positive definite (min eigenvalue {lo:.3e})")
    for X in (A, B, M, K):
        X.setflags(write=False)
    return ResponsePencil(A=A, B=B, M=M, K=K, spd_checked=bool(check_spd))


def pencil_from_mk(M, K, check_spd=False):
    """Build a pencil from ``M`` and ``K`` directly (``A = (M+K)/2``, ``B = (M-K)/2``)."""
    M = np.asarray(M, dtype=np.float64)
    K = np.asarray(K, dtype=np.float64)
    if M.shape != K.shape:
        raise PencilError(f"M and K differ in shape: {M.shape} vs {K.shape}")
    p = build_pencil(0.5 * (M + K), 0.5 * (M - K), check_spd=check_spd)
    # keep the caller's M, K bit-exact instead of the round-tripped sums
    M = M.copy()
    K = K.copy()
    M.setflags(write=False)
    K.setflags(write=False)
    object.__setattr__(p, "M", M)
    object.__setattr__(p, "K", K)
    return p


def _rows(X, n, name="X"):
    X = np.asarray(X)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] != n:
        raise PencilError(f"{name} has {X.shape[0]} rows, expected {n}")
    return X


def apply_k(p, X):
    """``K X`` (one counted GEMM)."""
    X = _rows(X, p.n)
    p.gemms.add(1)
    return matmul(p.K, X)


def apply_m(p, X):
    """``M X`` (one counted GEMM)."""
    X = _rows(X, p.n)
    p.gemms.add(1)
    return matmul(p.M, X)


def apply_mk(p, X):
    """``M (K X)`` as two dense products (two counted GEMMs)."""
    X = _rows(X, p.n)
    p.gemms.add(2)
    return matmul(p.M, matmul(p.K, X))


def k_inner(p, u, v):
    """The K-inner product ``u^H K v`` (conjugate-linear in ``u``)."""
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape != (p.n,) or v.shape != (p.n,):
        raise PencilError(f"vectors must have length {p.n}")
    return np.vdot(u, matmul(p.K, v))


def apply_full_shifted(p, tau, X):
    """``(H - tau S) X`` for a ``2n``-row block, using only ``A`` and ``B``.

    ``tau`` is a scalar, a :class:`ComplexShift`, or one value per column.
    Four counted GEMMs.
    """
    n = p.n
    X = _rows(X, 2 * n)
    if isinstance(tau, ComplexShift):
        tau = tau.value
    tau = np.asarray(tau)
    X1 = X[:n]
    X2 = X[n:]
    p.gemms.add(4)
    top = matmul(p.A, X1) + matmul(p.B, X2)
    bot = matmul(p.B, X1) + matmul(p.A, X2)
    if np.any(tau != 0):
        top = top - X1 * tau
        bot = bot + X2 * tau
    return np.vstack([top, bot])


def assemble_h(p):
    """Dense ``H = [[A, B], [B, A]]``; for tests and small problems only."""
    return np.block([[p.A, p.B], [p.B, p.A]])


def assemble_s(n):
    """Dense metric ``S = diag(I, -I)`` of size ``2n``."""
    return np.diag(np.concatenate([np.ones(n), -np.ones(n)]))
