import itertools

import pytest

from tdm.oracle.closed import P_coeff, Q_coeff, closed_alpha2, closed_alpha3, schroder, triple_legendre
from tdm.oracle.reference import KNOWN_DISCREPANCIES, reference_table
from tdm.seriesx import extract_alpha


def test_schroder():
    assert [schroder(k) for k in range(1, 6)] == [1, 2, 6, 22, 90]
    with pytest.raises(ValueError):
        schroder(0)


def test_P_Q_fixtures():
    assert [P_coeff(k) for k in range(1, 9)] == [1, 4, 19, 96, 501, 2668, 14407, 78592]
    assert [Q_coeff(k) for k in range(1, 9)] == [1, 5, 25, 129, 681, 3653, 19825, 108545]


def test_closed_alpha2_examples():
    assert closed_alpha2(1, 1) == 4
    assert closed_alpha2(1, 2) == 24
    assert closed_alpha2(3, 3) == 5700


def test_closed_alpha3_examples():
    assert closed_alpha3(1, 1, 1) == 96
    assert closed_alpha3(1, 1, 2) == 848
    assert closed_alpha3(3, 3, 3) == 25729488


def test_closed_forms_symmetric():
    for k in itertools.product(range(1, 5), repeat=2):
        assert closed_alpha2(*k) == closed_alpha2(*reversed(k))
    for k in itertools.product(range(1, 4), repeat=3):
        assert all(closed_alpha3(*p) == closed_alpha3(*k) for p in itertools.permutations(k))


def test_triple_legendre_start():
    assert triple_legendre(0) == 1


@pytest.mark.parametrize("v,kmax,fn", [(1, 12, schroder), (2, 8, closed_alpha2), (3, 5, closed_alpha3)])
def test_engine_equals_closed_forms(v, kmax, fn):
    for r in extract_alpha(v, kmax):
        assert r.alpha == fn(*r.kappa), r


def test_reference_lookups():
    t = reference_table()
    assert t.lookup(4, (1, 1, 1, 1)) == 5088
    assert t.lookup(5, (3, 3, 3, 3, 3)) == 3599012231119850
    assert t.lookup(2, (2, 3)) == 936
    assert t.lookup(2, (3, 2)) == 936
    assert [len(t.entries[v]) for v in range(1, 6)] == [3, 6, 9, 15, 20]
    assert len(t) == 53
    with pytest.raises(KeyError):
        t.lookup(3, (1, 1))


def test_reference_is_immutable():
    t = reference_table()
    with pytest.raises(TypeError):
        t.entries[2][(1, 1)] = 5
    t2 = t.with_override(2, (1, 1), 5)
    assert t2.lookup(2, (1, 1)) == 5 and t.lookup(2, (1, 1)) == 4


def test_known_discrepancies_are_table_entries():
    t = reference_table()
    for (v, kappa), engine in KNOWN_DISCREPANCIES.items():
        assert (v, kappa) in t
        assert t.lookup(v, kappa) != engine
        # the engine values share the 2**10 divisibility of their neighbours
        assert engine % 2**10 == 0 and t.lookup(v, kappa) % 2**10 != 0
