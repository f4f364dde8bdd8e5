import io as _io
import math

import numpy as np
import pytest

from mdhstream import diagnostics
from mdhstream.optimizer import LearnConfig
from mdhstream.oracle import GaussianMixture
from mdhstream.plotting import diagnostics_figure, selection_figure
from mdhstream.selection import prune_sequence, select_k_detailed


def test_log_checkpoints():
    pts = diagnostics.log_checkpoints(100000)
    assert pts[0] == 100 and pts[-1] == 100000
    assert {1000, 10000}.issubset(pts)
    assert len(pts) == 16
    assert diagnostics.log_checkpoints(500) == [100, 158, 251, 398, 500]
    assert diagnostics.log_checkpoints(50) == [50]


def test_single_gaussian_settles():
    g = GaussianMixture([1.0], [[0.0, 0.0]], [np.eye(2)])
    recs = diagnostics.run(g, 100000, LearnConfig(seed=1), seed=1, bias_samples=2000)
    last = recs[-1]
    assert last.t == 100000
    phi0 = 1 / math.sqrt(2 * math.pi)
    assert last.resid_v < 0.05 * phi0
    # the offset leaves the density peak but is held near the penalty band
    assert abs(last.b_orig) <= 0.15 * last.sigma_hat
    assert abs(np.linalg.norm(last.v) - 1) < 1e-10


def test_checkpoint_contents_and_tsv(tmp_path):
    g = GaussianMixture([0.5, 0.5], [[-3.0, 0.0], [3.0, 0.0]], [np.eye(2)] * 2)
    recs = diagnostics.run(g, 5000, LearnConfig(seed=2), seed=2, checkpoints=[100, 1000, 5000])
    assert [r.t for r in recs] == [100, 1000, 5000]
    for r in recs:
        assert r.h == pytest.approx(max(r.sigma_hat, 0.01) * r.t ** -0.2)
        assert r.bias_exact >= 0 and r.bias_mc >= 0
    path = tmp_path / "d.tsv"
    with open(path, "w") as fh:
        diagnostics.write_tsv(fh, recs, 2)
    rows = diagnostics.read_tsv(path)
    assert [r["t"] for r in rows] == [100, 1000, 5000]
    assert rows[-1]["v1"] == recs[-1].v[0]
    assert rows[0]["resid_b"] == recs[0].resid_b
    # same seeds, same numbers
    again = diagnostics.run(g, 5000, LearnConfig(seed=2), seed=2, checkpoints=[100, 1000, 5000])
    buf1, buf2 = _io.StringIO(), _io.StringIO()
    diagnostics.write_tsv(buf1, recs, 2)
    diagnostics.write_tsv(buf2, again, 2)
    assert buf1.getvalue() == buf2.getvalue()


def test_figures_are_written(tmp_path):
    g = GaussianMixture([0.5, 0.5], [[-3.0, 0.0], [3.0, 0.0]], [np.eye(2)] * 2)
    recs = diagnostics.run(g, 2000, LearnConfig(), seed=0, bias_samples=500)
    out = diagnostics_figure(recs, tmp_path / "f" / "diag.png")
    assert out.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    ss = {1: 40.0, 2: 10.0, 3: 12.0, 4: 4.0, 5: 4.0, 6: 1.0, 7: 1.0}
    seq = prune_sequence(depth=3, ss=ss)
    sel = select_k_detailed(seq, [3, 4])
    out = selection_figure(seq, sel, sel.k, tmp_path / "sel.png")
    assert out.stat().st_size > 1000
    selection_figure(seq, None, 2, tmp_path / "sel2.png")
