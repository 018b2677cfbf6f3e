"""File formats for fields, coefficients and assembled operators.

Fields and coefficients are CSV. Matrices go into ``.npz`` containers with a
small JSON header (dimensions, wavenumber, scale t, deformation tag); small
matrices also get a CSV copy. An EM block operator is four containers plus a
manifest.
"""

from __future__ import annotations

import csv
import json
import logging
from pathlib import Path

import numpy as np

from .emfield import EMBlockOperator
from .operators import DenseOperator
from .sphere import ReferenceSurface, degrees_orders

logger = logging.getLogger(__name__)

CSV_MATRIX_LIMIT = 64  # matrices with at most this many rows also get a CSV copy
FLOAT = "%.12e"


def _num(x: float) -> str:
    return FLOAT % x


def write_field_csv(path: str | Path, surface: ReferenceSurface, values: np.ndarray) -> Path:
    """Nodal samples as rows ``node, theta, phi, re_k, im_k`` per component k."""
    path = Path(path)
    v = np.asarray(values, dtype=complex).reshape(surface.n_nodes, -1)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        head = ["node", "theta", "phi"]
        for k in range(v.shape[1]):
            head += [f"re_{k}", f"im_{k}"]
        w.writerow(head)
        for i in range(surface.n_nodes):
            row = [str(i), _num(surface.theta[i]), _num(surface.phi[i])]
            for z in v[i]:
                row += [_num(z.real), _num(z.imag)]
            w.writerow(row)
    return path


def read_field_csv(path: str | Path) -> np.ndarray:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    vals = data[:, 3::2] + 1j * data[:, 4::2]
    return vals[:, 0] if vals.shape[1] == 1 else vals


def write_coeff_csv(path: str | Path, coeffs: np.ndarray, band_limit: int, label: str | None = None) -> Path:
    """Harmonic coefficients as rows ``[label,] degree, order, re, im``."""
    path = Path(path)
    c = np.asarray(coeffs, dtype=complex).reshape(-1)
    n, m = degrees_orders(band_limit)
    if c.size != n.size:
        raise ValueError("coefficient count does not match the band limit")
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow((["block"] if label else []) + ["degree", "order", "re", "im"])
        for k in range(c.size):
            w.writerow(([label] if label else []) + [str(n[k]), str(m[k]), _num(c[k].real), _num(c[k].imag)])
    return path


def read_coeff_csv(path: str | Path) -> np.ndarray:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2, usecols=(-2, -1))
    return data[:, 0] + 1j * data[:, 1]


def _header(M: np.ndarray, meta: dict) -> dict:
    return {
        "rows": int(M.shape[0]),
        "cols": int(M.shape[1]),
        "kappa": _jsonable(meta.get("kappa")),
        "t": _jsonable(meta.get("t", 0.0)),
        "deformation": str(meta.get("deformation", "none")),
        "op": str(meta.get("op", "")),
    }


def _jsonable(v):
    if v is None:
        return None
    if isinstance(v, (complex, np.complexfloating)):
        return [float(v.real), float(v.imag)]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def write_matrix(path: str | Path, matrix: np.ndarray, meta: dict | None = None) -> Path:
    """Binary container ``<path>.npz`` holding the matrix and a JSON header."""
    path = Path(path).with_suffix(".npz")
    M = np.asarray(matrix)
    header = _header(M, meta or {})
    np.savez(path, matrix=M, header=np.array(json.dumps(header, sort_keys=True)))
    if M.shape[0] <= CSV_MATRIX_LIMIT:
        with path.with_suffix(".csv").open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["row", "col", "re", "im"])
            for i in range(M.shape[0]):
                for j in range(M.shape[1]):
                    z = complex(M[i, j])
                    w.writerow([i, j, _num(z.real), _num(z.imag)])
    return path


def read_matrix(path: str | Path) -> tuple[np.ndarray, dict]:
    with np.load(Path(path).with_suffix(".npz")) as z:
        return z["matrix"], json.loads(str(z["header"]))


def write_operator(path: str | Path, op: DenseOperator) -> Path:
    meta = dict(op.meta)
    meta.setdefault("op", f"{op.domain}->{op.codomain}")
    return write_matrix(path, op.matrix, meta)


def write_em_block(directory: str | Path, op: EMBlockOperator) -> Path:
    """Four block containers plus ``manifest.json`` listing them."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    files = {}
    for name in ("pp", "pq", "qp", "qq"):
        block = getattr(op, name)
        write_operator(d / name, block)
        files[name] = f"{name}.npz"
    meta = {k: _jsonable(v) for k, v in sorted(op.pp.meta.items()) if k != "block"}
    manifest = {"blocks": files, "meta": meta}
    (d / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return d / "manifest.json"


def read_em_block(directory: str | Path) -> EMBlockOperator:
    d = Path(directory)
    manifest = json.loads((d / "manifest.json").read_text())
    blocks = {name: read_matrix(d / f)[0] for name, f in manifest["blocks"].items()}
    top = np.hstack([blocks["pp"], blocks["pq"]])
    bot = np.hstack([blocks["qp"], blocks["qq"]])
    return EMBlockOperator.from_matrix(np.vstack([top, bot]), manifest.get("meta"))
