import json

import numpy as np

from emshape import emfield as ef
from emshape import export as ex
from emshape.fields import random_coeffs
from emshape.sphere import default_grid


def test_field_csv_roundtrip(tmp_path, rng):
    s = default_grid(4)
    v = rng.standard_normal((s.n_nodes, 3)) + 1j * rng.standard_normal((s.n_nodes, 3))
    p = ex.write_field_csv(tmp_path / "f.csv", s, v)
    header = p.read_text().splitlines()[0]
    assert header == "node,theta,phi,re_0,im_0,re_1,im_1,re_2,im_2"
    assert np.allclose(ex.read_field_csv(p), v, rtol=1e-11)


def test_coeff_csv_roundtrip(tmp_path, rng):
    c = random_coeffs(rng, 5)
    p = ex.write_coeff_csv(tmp_path / "c.csv", c, 5, "p")
    assert p.read_text().splitlines()[1].startswith("p,0,0,")
    assert np.allclose(ex.read_coeff_csv(p), c, rtol=1e-11)


def test_matrix_container(tmp_path, rng):
    M = rng.standard_normal((5, 4)) + 1j
    ex.write_matrix(tmp_path / "m", M, {"kappa": 1.5 + 0j, "t": 0.01, "deformation": "bump"})
    back, header = ex.read_matrix(tmp_path / "m")
    assert np.array_equal(back, M)
    assert header == {"rows": 5, "cols": 4, "kappa": [1.5, 0.0], "t": 0.01, "deformation": "bump", "op": ""}
    assert (tmp_path / "m.csv").exists()


def test_large_matrix_skips_csv(tmp_path):
    ex.write_matrix(tmp_path / "big", np.zeros((ex.CSV_MATRIX_LIMIT + 1, 2)))
    assert not (tmp_path / "big.csv").exists()


def test_em_block_roundtrip(tmp_path):
    op = ef.assemble_C0star(default_grid(3))
    manifest = ex.write_em_block(tmp_path / "c0", op)
    data = json.loads(manifest.read_text())
    assert sorted(data["blocks"]) == ["pp", "pq", "qp", "qq"]
    assert np.array_equal(ex.read_em_block(tmp_path / "c0").matrix, op.matrix)
