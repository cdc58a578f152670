import numpy as np

from hexsyn.tableau import Tableau


def test_bell_pair_correlated():
    for seed in range(8):
        t = Tableau(2, np.random.default_rng(seed))
        t.h(0)
        t.cx(0, 1)
        a, ra = t.measure_z(0)
        b, rb = t.measure_z(1)
        assert ra and not rb and a == b


def test_x_basis_and_reset():
    t = Tableau(1, np.random.default_rng(0))
    t.reset(0, "X", 1)
    assert t.measure_x(0) == (1, False)
    t.z_gate(0)
    assert t.measure_x(0) == (0, False)
    t.reset(0, "Z", 1)
    assert t.measure_z(0) == (1, False)


def test_ghz_parity_in_x():
    t = Tableau(3, np.random.default_rng(3))
    t.h(0)
    t.cx(0, 1)
    t.cx(1, 2)
    outs = [t.measure_x(q) for q in range(3)]
    assert sum(o for o, _ in outs) % 2 == 0
    assert outs[2][1] is False or outs[2][1] == np.False_
