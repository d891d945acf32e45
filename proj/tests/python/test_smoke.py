import json

import pytest

import seqlab


def test_materialize():
    assert seqlab.materialize("1/3", 8).top_bits(8) == 85
    assert seqlab.materialize("sqrt2", 4).top_bits(4) == 6
    assert seqlab.materialize("champernowne", 8).top_bits(3) == 6
    x = seqlab.materialize("1/3", 64)
    assert seqlab.double_mod1(seqlab.double_mod1(x)).top_bits(32) == x.top_bits(32)
    assert seqlab.add_mod1(x, x).valid_bits == 63


def test_orbits():
    pts = seqlab.orbit("poly:0,1/4", 4)
    assert [n for n, _ in pts] == [1, 2, 3, 4]
    assert [p.to_decimal(2) for _, p in pts] == ["0.25", "0.50", "0.75", "0.00"]
    assert seqlab.orbit_cells("alphabeta:a=1/4;b=1/2;strategy=periodic:AB", 4, 2) == [0, 1, 3, 0]
    assert seqlab.orbit_cells("rotation:1/5", 5, 8, start=1)[-1] == 0


def test_dimension_and_discrepancy():
    prof = seqlab.box_counts("rotation:sqrt2", 1 << 16)
    assert prof[-1] == (12, 4096, 1 << 16)
    assert seqlab.estimate_dimension(prof, 4, 12)["slope"] >= 0.98
    flat = seqlab.box_counts("doubling:1/7", 4096)
    assert seqlab.estimate_dimension(flat, 4, 12)["slope"] <= 0.01
    assert seqlab.star_discrepancy([0.5]) == 0.5
    assert seqlab.entropy_from_counts([1, 1, 1, 1]) == 2.0


def test_residue():
    assert seqlab.mult_order(9) == 6
    assert seqlab.reduction_chain(9) == [(9, 6, 3), (3, 2, 1)]
    assert seqlab.cover_count(15, 2)["covered"] == 15
    n, trace = seqlab.solve_residue(9, 1, 0)
    assert n == 7 and len(trace) == 2
    assert seqlab.solve_residue(15, 1, 11)[0] == 40
    assert seqlab.brute_solve(3, 1, 2) == 3
    assert seqlab.egcd_modinv(6, 9) == (3, 2)


def test_errors():
    with pytest.raises(seqlab.UsageError):
        seqlab.cover_count(8, 1)
    with pytest.raises(seqlab.PrecisionError):
        seqlab.materialize("1/3", 8).top_bits(9)
    assert issubclass(seqlab.UsageError, seqlab.Error)


def test_cli():
    code, out, _ = seqlab.run_cli(["residue", "solve", "--m", "9", "--t", "0"])
    assert code == 0
    assert json.loads(out)["result"]["witness"] == "7"
    code, _, err = seqlab.run_cli(["residue", "cover", "--m", "8"])
    assert code == 1 and "usage error" in err
