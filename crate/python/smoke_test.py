"""Smoke test for the Python bindings.

Build and install first:

    pip install maturin
    maturin develop -m crates/python/Cargo.toml
"""

import math

import treeshift

LN2 = math.log(2)


def main():
    b = treeshift.BasicSet(2, 2, [(1, 1, 1), (1, 2, 2), (2, 2, 2)])
    assert len(b) == 3 and (1, 2, 2) in b
    assert b == treeshift.BasicSet.parse(b.to_text())
    assert treeshift.count(b, 5) == [3, 6, 27, 678]
    assert treeshift.count_per_symbol(b, 3) == [[2, 1], [5, 1]]
    assert treeshift.oracle_count(b, 4) == [26, 1]

    full = treeshift.BasicSet.full(2, 2)
    assert treeshift.count(full, 4)[-1] == 2 ** 15
    assert treeshift.count(full, 70, backend="log")[-1] > 0

    h = treeshift.entropy(b)
    assert abs(h["value"] - LN2) < 1e-6, h
    assert h["diagnostic"] == "converged"

    v = treeshift.classify(b)
    assert v["value"] == "ln 2" and v["justification"] == "dominant-type", v
    assert v["v_F"] == [1, 0, 0, 1]

    checks = treeshift.boundary_check(b)
    assert checks["neumann"]["relation"] == "equal"

    golden = (1 + math.sqrt(5)) / 2
    r = treeshift.realize("x^2 - x - 1")
    assert r["k"] == 3 and r["abs_error"] < 1e-6
    assert abs(treeshift.max_root("x^2 - x - 1") - golden) < 1e-12
    assert isinstance(r["basic_set"], treeshift.BasicSet)

    text = treeshift.derive_snre(b)
    assert treeshift.snre_to_basic_set(2, 2, text) == b

    rows = treeshift.sweep()
    assert len(rows) == 256
    assert all(row["value"] != "undetermined" for row in rows)

    assert abs(treeshift.probe(rule="maximal") - LN2) < 1e-6

    try:
        treeshift.count(b, 60)
    except treeshift.BudgetError:
        pass
    else:
        raise AssertionError("expected BudgetError")
    try:
        treeshift.BasicSet(2, 2, [(1, 3, 1)])
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError")

    print("python smoke test passed")


if __name__ == "__main__":
    main()
