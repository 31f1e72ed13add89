import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_table
from gmeasure.chain import RngStream
from gmeasure.gfunctions import SymbolDistribution, ex11, markov, spin
from gmeasure.hellinger import (
    HellingerRecord,
    acs_diagnostic,
    c_inequality_scan,
    c_middle,
    checkpoints,
    hellinger_sq,
    pair_path,
    step_update,
    svar_bound_sequence,
    tlog,
)
from gmeasure.seqspace import Context

probs = st.lists(st.floats(0.0, 1.0), min_size=2, max_size=6).filter(lambda v: sum(v) > 0).map(
    lambda v: np.array(v) / sum(v)
)


def test_hellinger_examples():
    assert hellinger_sq([0.2, 0.8], [0.2, 0.8]) == (0.0, 0.0)
    assert hellinger_sq([1, 0], [0, 1])[0] == pytest.approx(2.0)
    ref = (math.sqrt(0.5) - math.sqrt(0.25)) ** 2 + (math.sqrt(0.5) - math.sqrt(0.75)) ** 2
    assert hellinger_sq([0.5, 0.5], [0.25, 0.75])[0] == pytest.approx(ref, abs=1e-15)
    assert ref == pytest.approx(0.06815, abs=1e-5)


def test_hellinger_tail_interval():
    lo, hi = hellinger_sq([0.5, 0.4], [0.5, 0.45], 0.1, 0.05)
    assert lo <= hi and hi - lo == pytest.approx(0.15)


def test_hellinger_rejects_negative():
    with pytest.raises(ValueError):
        hellinger_sq([1.2, -0.2], [0.5, 0.5])


@given(probs, st.data())
def test_hellinger_bounded_symmetric(p, data):
    q = data.draw(probs.filter(lambda v: len(v) == len(p)))
    d = hellinger_sq(p, q)[0]
    assert -1e-15 <= d <= 2 + 1e-12
    assert d == pytest.approx(hellinger_sq(q, p)[0], abs=1e-15)
    # 2 - 2 * Bhattacharyya coefficient
    assert d == pytest.approx(2 - 2 * np.sum(np.sqrt(p * q)), abs=1e-12)


def test_tlog_examples():
    assert tlog(1.0) == 0.0
    assert tlog(math.e**2) == 1.0
    assert tlog(math.exp(0.5)) == pytest.approx(0.5)
    assert tlog(0.0) == -1.0
    assert tlog(math.inf) == 1.0
    assert tlog(math.exp(-3)) == -1.0


def test_step_update_equal_laws():
    d = SymbolDistribution([0, 1], [0.3, 0.7], 0.0, 0.0)
    rec = step_update(HellingerRecord.empty(), d, d, 1)
    assert rec.n == 1 and rec.alpha[0] == 1.0 and rec.d[0] == 0.0
    rec = step_update(rec, d, d, 0)
    assert rec.n == 2 and rec.B[-1] == 0.0 and rec.logZ[-1] == 0.0 and rec.Y[-1] == 0.0


def test_step_update_example():
    pi = SymbolDistribution([0, 1], [0.5, 0.5], 0.0, 0.0)
    pt = SymbolDistribution([0, 1], [0.25, 0.75], 0.0, 0.0)
    rec = step_update(HellingerRecord.empty(), pi, pt, 1)
    assert rec.alpha[0] == pytest.approx(1.5)
    assert rec.d[0] == pytest.approx(hellinger_sq([0.5, 0.5], [0.25, 0.75])[0])
    assert rec.logZ[0] == pytest.approx(math.log(1.5))


def test_step_update_singular():
    pi = SymbolDistribution([0, 1], [1.0, 0.0], 0.0, 0.0)
    pt = SymbolDistribution([0, 1], [0.5, 0.5], 0.0, 0.0)
    rec = step_update(HellingerRecord.empty(), pi, pt, 1)
    assert rec.alpha[0] == math.inf and rec.singular_step == 1


def test_logz_minus_inf_after_zero():
    rec = HellingerRecord.from_increments([1.2, 0.0, 3.0], [0.1, 0.2, 0.0])
    assert rec.logZ[0] == pytest.approx(math.log(1.2))
    assert rec.logZ[1] == -math.inf and rec.logZ[2] == -math.inf
    assert rec.Y.tolist() == pytest.approx([math.log(1.2), math.log(1.2) - 1, math.log(1.2)])


@pytest.mark.parametrize("gfn", ["table", "spin"])
@pytest.mark.parametrize("engine", ["auto", "generic"])
def test_record_invariants(gfn, engine):
    g = markov(random_table(3, 2, 2, floor=0.05), 2, 3) if gfn == "table" else spin()
    ia, ib = ("const:0", "const:2") if gfn == "table" else ("const:+1", "const:-1")
    w, rec = pair_path(g, ia, ib, 300, RngStream(1), engine=engine)
    assert np.all(np.diff(rec.B) >= 0)
    assert np.all(rec.d <= 2.0) and np.all(rec.d >= 0)
    assert np.allclose(rec.B, np.cumsum(rec.d), rtol=0, atol=0)
    assert np.allclose(rec.logZ, np.cumsum(np.log(rec.alpha)))


@pytest.mark.parametrize("g", [markov(random_table(3, 2, 3, floor=0.05), 2, 3), spin("pow1.5"), spin("pow3")])
def test_kernel_and_generic_records_agree(g):
    ia, ib = ("const:0", "const:1") if g.kind != "spin" else ("const:+1", "const:-1")
    w1, r1 = pair_path(g, ia, ib, 200, RngStream(4), engine="auto")
    w2, r2 = pair_path(g, ia, ib, 200, RngStream(4), engine="generic")
    assert np.array_equal(w1, w2)
    np.testing.assert_allclose(r1.alpha, r2.alpha, rtol=1e-9)
    np.testing.assert_allclose(r1.d, r2.d, rtol=1e-6, atol=1e-12)


def test_depth_merge():
    g = markov(random_table(2, 2, 7, floor=0.05), 2, 2)
    _, rec = pair_path(g, "const:0", "const:1", 50, RngStream(0))
    assert np.all(rec.d[2:] == 0.0)
    assert np.all(rec.B[2:] == rec.B[1])


def test_checkpoints():
    assert checkpoints(100) == [1, 2, 4, 8, 10, 16, 25, 32, 50, 64, 100]


def test_svar_bound_sequence_depth():
    g = markov(random_table(2, 2, 1), 2, 2)
    b = svar_bound_sequence(g, 10)
    assert b[0] == 2.0 and np.all(b[3:] == 0.0)


def test_identical_inits_converge():
    v = acs_diagnostic(spin(), "const:+1", "const:+1", paths=8, steps=200, seed=1)
    assert v.verdict == "converges"
    assert np.all(v.B == 0.0)


def test_singular_witness_forced():
    # mu never emits 1 from state 0, mu-tilde does with probability 1
    g = markov([[1.0, 0.0], [0.0, 1.0]], 1, 2)
    v = acs_diagnostic(g, "const:0", "const:1", paths=8, steps=100, seed=0)
    assert v.verdict == "not_locally_absolutely_continuous"
    assert v.singular_witness == {"path": 0, "step": 1, "cylinder": [1], "symbol": 1}


def test_minimums_enforced():
    with pytest.raises(ValueError):
        acs_diagnostic(spin(), "const:+1", "const:-1", paths=4, steps=1000)


def test_symmetric_run():
    g = markov(random_table(2, 1, 3, floor=0.1), 1, 2)
    v = acs_diagnostic(g, "const:0", "const:1", paths=8, steps=200, symmetric=True)
    assert v.swapped is not None and v.swapped.verdict == "converges"
    assert "swapped" in v.to_json()


def test_ex11_generic_path_bounds():
    g = ex11()
    _, rec = pair_path(g, "const:0", "const:1", 60, RngStream(0))
    assert np.all(rec.d_lo <= rec.d) and np.all(rec.d <= rec.d_hi)
    assert rec.uncertainty < 1e-8
    bounds = svar_bound_sequence(g, 60)
    assert np.all(rec.d_lo <= bounds + 1e-9)


def test_c_scan_examples():
    assert c_middle(0.0) == 1.0
    assert c_middle(1.0) == 0.0
    r = c_inequality_scan([0.0])
    assert r.C == 1.0


def test_c_scan_grid():
    r = c_inequality_scan(np.geomspace(1e-6, 1e3, 10_000))
    assert 1.0 <= r.C < 10.0
    with pytest.raises(ValueError):
        c_inequality_scan([-1.0])
