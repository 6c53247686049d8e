"""Interpolatory reduced models of the polarizability.

Two variants share one interface:

``"mk"``
    K-orthonormal basis ``V`` of the half-size solutions, reduced operator
    ``V^T K M K V`` and dipoles ``V^T K d``;
    ``alpha(w) = 2 d^T (MKhat - w^2 I)^{-1} d``.
``"full"``
    Euclidean orthonormal basis of the full-size solutions, reduced pencil
    ``(V^T H V, V^T S V)`` and dipoles ``V^T [d; d]``;
    ``alpha(w) = d^T (Hhat - w Shat)^{-1} d``.

Complex solution vectors are split into real and imaginary parts, so all
reduced matrices are real.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, field

import numpy as np

from .pencil import apply_full_shifted, apply_k, apply_m, matmul
from .reference import dense_alpha
from .spectrum import SpectrumResult, sigma_from_tensors

DEFLATION_RTOL = 1e-10
_CHUNK_BYTES = 64 * 2**20


class EmptyBasisError(ValueError):
    """Every candidate column was deflated."""


class ReducedSingularError(np.linalg.LinAlgError):
    """The reduced system is exactly singular at the requested frequency."""


@dataclass
class Basis:
    """Real basis, its K-image (``mk`` variant only) and the deflation log."""

    V: np.ndarray
    KV: np.ndarray | None = None
    deflations: list = field(default_factory=list)

    @property
    def r(self):
        return self.V.shape[1]


@dataclass
class ReducedModel:
    """A projected model ready for cheap evaluation at any frequency.

    Attributes
    ----------
    variant : {"mk", "full"}
    basis : Basis
    op : ndarray, shape (r, r)
        ``MKhat`` for ``mk``, ``Hhat`` for ``full``.
    S_hat : ndarray or None
        Reduced metric (``full`` only).
    d_hat : ndarray, shape (r, 3)
    shifts : list of complex
        Interpolation frequencies whose solutions span the basis.
    """

    variant: str
    basis: Basis | None
    op: np.ndarray
    S_hat: np.ndarray | None
    d_hat: np.ndarray
    shifts: list = field(default_factory=list)
    split: str = "re-im"
    _MKV: np.ndarray | None = field(default=None, repr=False)
    _eig: tuple | None = field(default=None, repr=False)

    @property
    def r(self):
        return self.op.shape[0]

    @property
    def k(self):
        return len(self.shifts)

    @property
    def deflations(self):
        return [] if self.basis is None else self.basis.deflations

    def to_dict(self, include_basis=False):
        out = {
            "variant": self.variant,
            "split": self.split,
            "r": self.r,
            "shifts": [[complex(s).real, complex(s).imag] for s in self.shifts],
            "op": _encode(self.op),
            "S_hat": None if self.S_hat is None else _encode(self.S_hat),
            "d_hat": _encode(self.d_hat),
            "deflations": self.deflations,
        }
        if include_basis and self.basis is not None:
            out["V"] = _encode(self.basis.V)
        return out

    def to_json(self, include_basis=False, **kw):
        return json.dumps(self.to_dict(include_basis), **kw)

    @classmethod
    def from_dict(cls, obj):
        V = _decode(obj["V"]) if obj.get("V") else None
        basis = None if V is None else Basis(V, None, list(obj.get("deflations", [])))
        return cls(
            variant=obj["variant"],
            basis=basis,
            op=_decode(obj["op"]),
            S_hat=None if obj.get("S_hat") is None else _decode(obj["S_hat"]),
            d_hat=_decode(obj["d_hat"]),
            shifts=[complex(a, b) for a, b in obj["shifts"]],
            split=obj.get("split", "re-im"),
        )

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def _encode(a):
    a = np.ascontiguousarray(a, dtype="<f8")
    return {"dtype": "<f8", "shape": list(a.shape), "data": base64.b64encode(a.tobytes()).decode("ascii")}


def _decode(obj):
    raw = base64.b64decode(obj["data"])
    return np.frombuffer(raw, dtype=obj["dtype"]).reshape(obj["shape"]).astype(np.float64)


def _real_columns(X):
    """Real candidate columns: ``Re x`` then ``Im x`` for each column ``x``."""
    X = np.asarray(X)
    if X.ndim == 1:
        X = X[:, None]
    if not np.iscomplexobj(X):
        return X.astype(np.float64), [(j, "re") for j in range(X.shape[1])]
    cols, tags = [], []
    for j in range(X.shape[1]):
        cols.append(X[:, j].real)
        tags.append((j, "re"))
        cols.append(X[:, j].imag)
        tags.append((j, "im"))
    return np.column_stack(cols), tags


def _orthonormalize(U, tags, V, KV, apply_metric, rtol):
    """Two-pass Gram-Schmidt of the columns of ``U`` against ``V`` and each other.

    ``apply_metric`` maps a block to its image under the inner-product matrix
    (``None`` for the Euclidean product).  Returns the enlarged ``V``, ``KV``
    and the list of deflated columns.
    """
    n = U.shape[0]
    Vs = [V] if V is not None and V.size else []
    KVs = [KV] if KV is not None and KV.size else []
    deflated = []
    KU = apply_metric(U) if apply_metric else U
    pre = np.sqrt(np.maximum(np.einsum("ij,ij->j", U, KU), 0.0))
    for j in range(U.shape[1]):
        u = U[:, j].copy()
        if pre[j] == 0:
            deflated.append({"column": tags[j][0], "part": tags[j][1], "ratio": 0.0})
            continue
        Vc = np.column_stack(Vs) if Vs else np.zeros((n, 0))
        KVc = np.column_stack(KVs) if apply_metric and KVs else Vc
        for _ in range(2):
            if Vc.shape[1]:
                u -= Vc @ (KVc.T @ u)
        ku = apply_metric(u[:, None])[:, 0] if apply_metric else u
        nrm = np.sqrt(max(float(u @ ku), 0.0))
        ratio = nrm / pre[j]
        if ratio < rtol:
            deflated.append({"column": tags[j][0], "part": tags[j][1], "ratio": float(ratio)})
            continue
        Vs = [Vc, (u / nrm)[:, None]]
        if apply_metric:
            KVs = [KVc, (ku / nrm)[:, None]]
    V = np.column_stack(Vs) if Vs else np.zeros((n, 0))
    KV = (np.column_stack(KVs) if KVs else np.zeros((n, 0))) if apply_metric else None
    return V, KV, deflated


def build_basis_mk(p, solutions, previous=None, rtol=DEFLATION_RTOL):
    """K-orthonormal basis of the real span of the solution columns.

    Parameters
    ----------
    p : ResponsePencil
    solutions : ndarray, shape (n, m)
        Shifted-solve columns (real or complex).
    previous : Basis, optional
        Existing basis to extend; its columns are kept unchanged.
    rtol : float
        Columns whose K-norm after orthogonalization drops below ``rtol``
        times their initial K-norm are dropped and logged.

    Raises
    ------
    EmptyBasisError
        If the resulting basis has no columns.
    """
    U, tags = _real_columns(solutions)
    if U.shape[0] != p.n:
        raise ValueError(f"solutions have {U.shape[0]} rows, expected {p.n}")
    V0 = previous.V if previous is not None else None
    KV0 = previous.KV if previous is not None else None
    V, KV, defl = _orthonormalize(U, tags, V0, KV0, lambda X: apply_k(p, X), rtol)
    log = (list(previous.deflations) if previous is not None else []) + defl
    if V.shape[1] == 0:
        raise EmptyBasisError("all solution columns were deflated (degenerate right-hand side)")
    return Basis(V, KV, log)


def project_mk(p, d, basis, shifts=(), previous=None):
    """Reduced operator ``V^T K M K V`` and dipoles ``V^T K d`` for a K-orthonormal basis.

    When ``previous`` was projected on a leading block of ``basis``, only the
    new columns are pushed through ``M``.
    """
    KV = basis.KV
    if KV is None:
        KV = apply_k(p, basis.V)
    r0 = 0
    if previous is not None and previous._MKV is not None and previous.r <= basis.r:
        r0 = previous.r
    if r0:
        MKV = np.hstack([previous._MKV, apply_m(p, KV[:, r0:])])
    else:
        MKV = apply_m(p, KV)
    op = KV.T @ MKV
    op = 0.5 * (op + op.T)
    d_hat = KV.T @ d.d_tilde
    return ReducedModel("mk", basis, op, None, d_hat, list(shifts), "re-im", MKV)


def build_and_project_full(p, d, solutions, shifts=(), split="structured", rtol=DEFLATION_RTOL):
    """Orthonormal basis from full-size solutions and the reduced pencil.

    ``split="structured"`` splits each solution ``[x1; x2]`` into the parts
    ``x1 - x2`` and ``x1 + x2`` that live in the two blocks of the
    ``diag(K, M)`` form of the pencil, orthonormalizes each family and uses
    ``V = [[Va, Vb], [-Va, Vb]] / sqrt(2)``.  That subspace contains the
    solutions at ``+tau`` and ``-tau`` alike and gives spectra identical to
    the ``mk`` variant.  ``split="plain"`` orthonormalizes the real and
    imaginary parts of the solutions as they are.
    """
    n = p.n
    X = np.asarray(solutions)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] != 2 * n:
        raise ValueError(f"solutions have {X.shape[0]} rows, expected {2 * n}")
    if split == "structured":
        Ua, ta = _real_columns(X[:n] - X[n:])
        Ub, tb = _real_columns(X[:n] + X[n:])
        Va, _, da = _orthonormalize(Ua, ta, None, None, None, rtol)
        Vb, _, db = _orthonormalize(Ub, tb, None, None, None, rtol)
        for e in da:
            e["block"] = "x1-x2"
        for e in db:
            e["block"] = "x1+x2"
        V = np.vstack([np.hstack([Va, Vb]), np.hstack([-Va, Vb])]) / np.sqrt(2.0)
        defl = da + db
    elif split == "plain":
        U, tags = _real_columns(X)
        V, _, defl = _orthonormalize(U, tags, None, None, None, rtol)
    else:
        raise ValueError(f"unknown split {split!r}")
    if V.shape[1] == 0:
        raise EmptyBasisError("all solution columns were deflated (degenerate right-hand side)")
    HV = apply_full_shifted(p, 0.0, V)
    H_hat = V.T @ HV
    H_hat = 0.5 * (H_hat + H_hat.T)
    SV = np.vstack([V[:n], -V[n:]])
    S_hat = V.T @ SV
    S_hat = 0.5 * (S_hat + S_hat.T)
    d_hat = V.T @ d.stacked()
    return ReducedModel("full", Basis(V, None, defl), H_hat, S_hat, d_hat, list(shifts), split)


def _shift_value(shift):
    return shift.value if hasattr(shift, "value") else complex(shift)


def eval_reduced_tensor(model, shift):
    """Reduced polarizability tensor at one complex frequency (dense LU)."""
    w = _shift_value(shift)
    r = model.r
    if model.variant == "mk":
        G = model.op - (w * w) * np.eye(r)
        scale = 2.0
    else:
        G = model.op - w * model.S_hat
        scale = 1.0
    try:
        Y = np.linalg.solve(G, model.d_hat.astype(np.complex128))
    except np.linalg.LinAlgError as exc:
        raise ReducedSingularError(f"reduced system singular at {w}") from exc
    alpha = scale * (model.d_hat.T @ Y)
    if not np.all(np.isfinite(alpha)):
        raise ReducedSingularError(f"reduced system singular at {w}")
    return alpha


def _mk_eig(model):
    if model._eig is None:
        theta, Q = np.linalg.eigh(model.op)
        model._eig = (theta, Q.T @ model.d_hat)
    return model._eig


def reduced_tensors(model, omega_tilde):
    """Reduced tensors at many complex frequencies, shape ``(N, 3, 3)``.

    The ``mk`` operator is symmetric, so it is diagonalized once and every
    frequency costs ``O(r)``; the ``full`` pencil is factorized per frequency.
    """
    wt = np.atleast_1d(np.asarray(omega_tilde, dtype=np.complex128))
    if model.variant == "mk":
        theta, t = _mk_eig(model)
        denom = theta[None, :] - wt[:, None] ** 2
        if np.any(denom == 0):
            raise ReducedSingularError("frequency hits a reduced pole")
        return 2.0 * np.einsum("ia,ib,wi->wab", t, t, 1.0 / denom)
    r = model.r
    out = np.empty((wt.size, 3, 3), dtype=np.complex128)
    chunk = max(1, _CHUNK_BYTES // (16 * r * r))
    for s in range(0, wt.size, chunk):
        w = wt[s : s + chunk]
        G = model.op[None] - w[:, None, None] * model.S_hat[None]
        try:
            Y = np.linalg.solve(G, np.broadcast_to(model.d_hat, (w.size, r, 3)).astype(np.complex128))
        except np.linalg.LinAlgError as exc:
            raise ReducedSingularError("reduced pencil singular on the grid") from exc
        out[s : s + chunk] = np.einsum("ia,wib->wab", model.d_hat, Y)
    if not np.all(np.isfinite(out)):
        raise ReducedSingularError("reduced pencil singular on the grid")
    return out


def eval_spectrum(model, grid, keep_tensors=False):
    """``sigma(w) = w Im tr alpha(w + i eta)`` of the reduced model on ``grid``."""
    om = grid.omegas
    tens = reduced_tensors(model, om + 1j * grid.eta)
    return SpectrumResult(om, sigma_from_tensors(om, tens), tens if keep_tensors else None,
                          {"method": f"mor-{model.variant}", "k": model.k, "r": model.r})


def moment_match_check(p, d, model, shift, h):
    """Relative value and first-derivative mismatch of ``tr alpha`` at ``shift``.

    Derivatives are centered finite differences along the real axis with step
    ``h``, the full-space values coming from dense solves.
    """
    w = _shift_value(shift)
    pts = np.array([w, w + h, w - h])
    full = np.trace(dense_alpha(p, d, pts), axis1=1, axis2=2)
    red = np.trace(reduced_tensors(model, pts), axis1=1, axis2=2)
    value_error = abs(red[0] - full[0]) / abs(full[0])
    dfull = (full[1] - full[2]) / (2 * h)
    dred = (red[1] - red[2]) / (2 * h)
    derivative_error = abs(dred - dfull) / abs(dfull)
    return float(value_error), float(derivative_error)
