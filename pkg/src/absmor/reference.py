"""Dense ground truth: structured eigendecomposition, sum-over-states and CPP spectra."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectrum import SpectrumResult, sigma_from_tensors, write_csv

SPD_RTOL = 1e-10
_CHUNK_BYTES = 64 * 2**20


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class StructuredEigen:
    """Positive excitation energies with the ``X + Y`` and ``X - Y`` vectors.

    ``M = (X-Y) diag(lam) (X-Y)^T``, ``K = (X+Y) diag(lam) (X+Y)^T`` and
    ``(X-Y)^T (X+Y) = I``.
    """

    lambdas: np.ndarray
    XplusY: np.ndarray
    XminusY: np.ndarray
    residual: float
    biorthogonality: float

    def count_in_window(self, omega_min, omega_max):
        lam = self.lambdas
        return int(np.count_nonzero((lam >= omega_min) & (lam <= omega_max)))


@dataclass(frozen=True)
class OscillatorTable:
    """Transition moments ``t_n = d^T (x+y)_n`` and weights ``2 lam_n |t_n|^2``."""

    lambdas: np.ndarray
    moments: np.ndarray

    @property
    def weights(self):
        return 2.0 * self.lambdas * np.sum(self.moments**2, axis=1)

    def write_csv(self, path):
        t = self.moments
        write_csv(path, [self.lambdas, t[:, 0], t[:, 1], t[:, 2], self.weights],
                  ["lambda", "tx", "ty", "tz", "weight"])


def _spd_sqrt(X, name):
    w, Q = np.linalg.eigh(X)
    if w[0] <= SPD_RTOL * max(abs(w[-1]), np.finfo(float).tiny):
        raise NotPositiveDefiniteError(f"{name} is not positive definite (min eigenvalue {w[0]:.3e})")
    return w, Q


def dense_structured_eig(p):
    """Structured eigendecomposition of ``MK`` via a symmetric square root of ``K``.

    With ``K = L L^T`` (``L = K^{1/2}``) and ``L^T M L = Q diag(lam^2) Q^T``,
    ``X+Y = L Q lam^{-1/2}`` and ``X-Y = L^{-T} Q lam^{1/2}``.
    """
    wk, Qk = _spd_sqrt(p.K, "K")
    _spd_sqrt(p.M, "M")
    sk = np.sqrt(wk)
    L = (Qk * sk) @ Qk.T
    Linv = (Qk / sk) @ Qk.T
    C = L @ p.M @ L
    C = 0.5 * (C + C.T)
    lam2, Q = np.linalg.eigh(C)
    if lam2[0] <= 0:
        raise NotPositiveDefiniteError("L^T M L is not positive definite")
    lam = np.sqrt(lam2)
    XpY = (L @ Q) / np.sqrt(lam)
    XmY = (Linv @ Q) * np.sqrt(lam)
    MK_XmY = p.M @ (p.K @ XmY)
    scale = max(np.max(np.abs(MK_XmY)), np.finfo(float).tiny)
    residual = float(np.max(np.abs(MK_XmY - XmY * lam2)) / scale)
    bio = float(np.max(np.abs(XmY.T @ XpY - np.eye(p.n))))
    return StructuredEigen(lam, XpY, XmY, residual, bio)


def oscillator_table(eig, d):
    return OscillatorTable(eig.lambdas.copy(), eig.XplusY.T @ d.d_tilde)


def lorentzian_tensors(eig, d, omegas, eta):
    """Sum-over-states ``alpha(w + i eta) = sum_n 2 lam_n t_n t_n^T / (lam_n^2 - (w + i eta)^2)``."""
    t = eig.XplusY.T @ d.d_tilde
    lam = eig.lambdas
    s = (np.asarray(omegas, dtype=np.float64) + 1j * eta) ** 2
    denom = lam[None, :] ** 2 - s[:, None]
    return np.einsum("n,na,nb,wn->wab", 2.0 * lam, t, t, 1.0 / denom)


def lorentzian_spectrum(eig, d, grid, keep_tensors=False):
    """Sum-over-states spectrum ``omega * Im tr alpha`` on ``grid``."""
    om = grid.omegas
    tens = lorentzian_tensors(eig, d, om, grid.eta)
    sigma = sigma_from_tensors(om, tens)
    return SpectrumResult(om, sigma, tens if keep_tensors else None,
                          {"method": "lorentzian", "n_states": int(eig.lambdas.size)})


def dense_alpha(p, d, omega_tilde):
    """``2 d^T K (MK - w^2 I)^{-1} d`` by dense LU for each complex frequency.

    Returns an array of shape ``(len(omega_tilde), 3, 3)``.
    """
    wt = np.atleast_1d(np.asarray(omega_tilde, dtype=np.complex128))
    n = p.n
    MK = p.M @ p.K
    Kd = p.K @ d.d_tilde
    out = np.empty((wt.size, 3, 3), dtype=np.complex128)
    chunk = max(1, _CHUNK_BYTES // (16 * n * n))
    eye = np.eye(n)
    for s in range(0, wt.size, chunk):
        w2 = wt[s : s + chunk] ** 2
        G = MK[None, :, :] - w2[:, None, None] * eye[None, :, :]
        rhs = np.broadcast_to(d.d_tilde, (w2.size, n, 3))
        X = np.linalg.solve(G, rhs)
        out[s : s + chunk] = 2.0 * np.einsum("ia,wib->wab", Kd, X)
    return out


def dense_cpp_spectrum(p, d, grid, keep_tensors=False):
    """Conventional CPP: one dense factorization of ``MK - w^2 I`` per grid point."""
    om = grid.omegas
    tens = dense_alpha(p, d, om + 1j * grid.eta)
    sigma = sigma_from_tensors(om, tens)
    return SpectrumResult(om, sigma, tens if keep_tensors else None, {"method": "dense-cpp"})
