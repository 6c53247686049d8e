"""Matrix Market ingestion and export of pencils and dipole blocks."""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse

from .pencil import DipoleBlock, build_pencil, pencil_from_mk


def read_dense(path):
    """Read a coordinate or array Matrix Market file into a dense float array.

    Symmetric storage is expanded by :func:`scipy.io.mmread`.
    """
    M = scipy.io.mmread(os.fspath(path))
    if scipy.sparse.issparse(M):
        M = M.toarray()
    M = np.asarray(M)
    if np.iscomplexobj(M):
        if np.any(M.imag != 0):
            raise ValueError(f"{path}: complex entries are not supported")
        M = M.real
    return M.astype(np.float64)


def write_dense(path, X, symmetric=False, comment=""):
    """Write a dense array in Matrix Market array format with full precision."""
    X = np.asarray(X, dtype=np.float64)
    tmp = Path(path).with_name(f".tmp-{Path(path).name}")
    scipy.io.mmwrite(os.fspath(tmp), X, comment=comment, field="real",
                     precision=17, symmetry="symmetric" if symmetric else "general")
    # mmwrite appends .mtx when the name lacks it
    written = tmp if tmp.exists() else tmp.with_name(tmp.name + ".mtx")
    os.replace(written, path)


def load_problem(directory=None, A=None, B=None, M=None, K=None, d=None, check_spd=False):
    """Load ``(pencil, dipoles)`` from ``A.mtx, B.mtx`` or ``M.mtx, K.mtx`` plus ``d.mtx``.

    Explicit paths override files found in ``directory``.  Giving both an
    ``A/B`` and an ``M/K`` pair is an error.
    """
    base = Path(directory) if directory is not None else None

    def pick(explicit, name):
        if explicit is not None:
            return Path(explicit)
        if base is not None and (base / name).exists():
            return base / name
        return None

    if (A is not None or B is not None) and (M is not None or K is not None):
        raise ValueError("give either A/B or M/K, not both")
    pd = pick(d, "d.mtx")
    if pd is None:
        raise ValueError("dipole file d.mtx is required")
    pa, pb = pick(A, "A.mtx"), pick(B, "B.mtx")
    pm, pk = pick(M, "M.mtx"), pick(K, "K.mtx")
    use_mk = M is not None or K is not None or (pa is None and pb is None)
    if not use_mk:
        if pa is None or pb is None:
            raise ValueError("both A.mtx and B.mtx are required")
        p = build_pencil(read_dense(pa), read_dense(pb), check_spd=check_spd)
    else:
        if pm is None or pk is None:
            raise ValueError("no pencil found: need A.mtx and B.mtx, or M.mtx and K.mtx")
        p = pencil_from_mk(read_dense(pm), read_dense(pk), check_spd=check_spd)
    dip = DipoleBlock(read_dense(pd))
    if dip.n != p.n:
        raise ValueError(f"d.mtx has {dip.n} rows, pencil has n={p.n}")
    return p, dip


def save_problem(directory, pencil, dipoles):
    """Write ``A.mtx``, ``B.mtx`` (symmetric storage) and ``d.mtx``."""
    base = Path(directory)
    base.mkdir(parents=True, exist_ok=True)
    write_dense(base / "A.mtx", pencil.A, symmetric=True)
    write_dense(base / "B.mtx", pencil.B, symmetric=True)
    write_dense(base / "d.mtx", dipoles.d_tilde)
