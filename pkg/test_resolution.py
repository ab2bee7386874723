#!/usr/bin/env python3
"""
Resolution-level tests: minimal resolutions, charts, chain maps and read-off
Run with: python test_resolution.py
"""

import sys
from pathlib import Path

# Add project root to path
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

import numpy as np

from common.errors import InputError, WindowError
from graded_algebra.catalog import standard_algebra
from graded_module.module import ModuleMap, free_module, trivial_module
from resolution_engine.chain_maps import ext_class, induced_ext_map, lift_chain_map, yoneda_product
from resolution_engine.chart import available_products, ext_generators, ext_ranks, h0_failures, h0_unchecked, shift_chart
from resolution_engine.les import les_rank_check
from resolution_engine.readoff import collapse_check, read_off_groups, s_bound
from resolution_engine.resolution import minimal_resolution
from cli_corpus.presets import load_preset

# Ext_{A(1)}(F_2) for s <= 3, t <= 8: h0 tower, h1, h1^2 and the class in stem 4
A1_RANKS = {(0, 0): 1, (1, 1): 1, (1, 2): 1, (2, 2): 1, (2, 4): 1, (3, 3): 1, (3, 7): 1}


def test_minimal_resolution():
    """Test minimal resolutions of the ground field."""
    print("Testing minimal resolutions...")

    a0 = standard_algebra("A(0)")
    r = minimal_resolution(trivial_module(a0), 5, 8)
    assert r.ranks() == {(s, s): 1 for s in range(6)}, "Ext over A(0) is F_2[h0]"

    a1 = standard_algebra("A(1)")
    r = minimal_resolution(trivial_module(a1), 3, 8)
    assert {c: n for c, n in r.ranks().items() if n} == A1_RANKS
    assert r.audit() == [], "d o d, minimality and exactness should hold"

    free = minimal_resolution(free_module(a1), 3, 8)
    assert {c: n for c, n in free.ranks().items() if n} == {(0, 0): 1}

    print("  ✓ Minimal resolution tests passed")
    return True


def test_resolution_window():
    """Test the trust-window and resume contracts."""
    print("Testing resolution windows...")

    w3 = load_preset("w3")
    try:
        minimal_resolution(w3, 2, 12)
        assert False, "t_max above the truncation degree should be refused"
    except WindowError:
        pass

    seagull = load_preset("a1-seagull")
    partial = minimal_resolution(seagull, 2, 6)
    try:
        partial.require(3, 4)
        assert False, "Cells outside the computed window should be refused"
    except WindowError:
        pass
    resumed = minimal_resolution(seagull, 3, 9, resume=partial)
    fresh = minimal_resolution(seagull, 3, 9)
    assert resumed.ranks() == fresh.ranks(), "Resuming should match a fresh computation"
    assert resumed.content_hash() == fresh.content_hash()

    try:
        minimal_resolution(load_preset("a1-ceta"), 3, 9, resume=fresh)
        assert False, "A resolution of another module cannot be resumed"
    except InputError:
        pass

    print("  ✓ Resolution window tests passed")
    return True


def test_charts_and_products():
    """Test Ext charts with filtration-one product edges."""
    print("Testing charts and products...")

    a1 = standard_algebra("A(1)")
    r = minimal_resolution(trivial_module(a1), 3, 8)
    assert available_products(r) == ["h0", "h1"]

    chart = ext_ranks(r, ["h0", "h1"])
    assert chart.total_rank() == len(A1_RANKS)
    assert chart.product_matrix("h0", 0, 0, (1, 1)).tolist() == [[1]]
    assert chart.product_matrix("h1", 0, 0, (1, 2)).tolist() == [[1]]
    assert chart.product_matrix("h1", 1, 2, (2, 4)).tolist() == [[1]]
    assert chart.product_matrix("h0", 1, 2, (2, 3)).size == 0, "h0 h1 lands in a zero cell"
    assert h0_failures(chart, 0) == []
    assert (1, 2) in h0_failures(chart, 2), "h0 kills h1"

    # only h0 and h1 fail to be products of lower classes below stem 4
    generators = ext_generators(chart, ring=True)
    assert (1, 1) in generators and (1, 2) in generators
    assert (2, 2) not in generators and (2, 4) not in generators
    assert (0, 0) not in generators, "The unit is not a ring generator"
    assert (0, 0) in ext_generators(chart), "As a module the unit class generates"

    # h0 out of the top filtration leaves the window, so those cells go unchecked
    assert h0_unchecked(chart, 4) == [(3, 3), (3, 7)]

    shifted = shift_chart(chart, 3)
    assert shifted.rank(1, 4) == chart.rank(1, 1)

    try:
        ext_ranks(r, ["alpha"])
        assert False, "A(1) has no generator dual to alpha"
    except InputError:
        pass

    print("  ✓ Chart and product tests passed")
    return True


def test_yoneda_products():
    """Test Yoneda products in Ext of the ground field."""
    print("Testing Yoneda products...")

    a1 = standard_algebra("A(1)")
    ground = minimal_resolution(trivial_module(a1), 3, 8)
    h0 = ext_class(ground, 1, 1)
    h1 = ext_class(ground, 1, 2)

    s, t, product = yoneda_product(ground, ground, h1, h1)
    assert (s, t) == (2, 4) and product.tolist() == [1], "h1^2 is nonzero"
    _, _, product = yoneda_product(ground, ground, h0, h1)
    assert not product.any(), "h0 h1 = 0"
    _, _, product = yoneda_product(ground, ground, h0, h0)
    assert product.tolist() == [1], "h0^2 is nonzero"
    _, _, product = yoneda_product(ground, ground, h1, ext_class(ground, 2, 4))
    assert not product.any(), "h1^3 = 0"

    atmf = standard_algebra("Atmf")
    ground3 = minimal_resolution(trivial_module(atmf), 2, 10)
    alpha = ext_class(ground3, 1, 4)
    _, _, product = yoneda_product(ground3, ground3, alpha, alpha)
    assert not product.any(), "alpha^2 = 0"

    print("  ✓ Yoneda product tests passed")
    return True


def test_chain_maps():
    """Test lifting module maps and the induced maps on Ext."""
    print("Testing chain maps...")

    seagull = load_preset("a1-seagull")
    r = minimal_resolution(seagull, 3, 8)
    identity = induced_ext_map(ModuleMap.identity(seagull), r, r)
    for (s, t), matrix in identity.items():
        assert np.array_equal(matrix % 2, np.eye(r.rank(s, t), dtype=matrix.dtype)), f"identity fails at {(s, t)}"

    atmf = standard_algebra("Atmf")
    cnu = load_preset("atmf-cnu")
    F = trivial_module(atmf)
    q = ModuleMap.from_generator(cnu, F, "1", name="q")
    r_cnu = minimal_resolution(cnu, 2, 10)
    r_F = minimal_resolution(F, 2, 10)
    chain = lift_chain_map(q, r_cnu, r_F)
    assert chain.stages == 2

    print("  ✓ Chain map tests passed")
    return True


def test_long_exact_sequence():
    """Test the LES rank audit for 0 -> S^4 F3 -> Cnu -> F3 -> 0."""
    print("Testing long exact sequences...")

    atmf = standard_algebra("Atmf")
    cnu = load_preset("atmf-cnu")
    sub, quot = trivial_module(atmf, 4), trivial_module(atmf)
    i = ModuleMap.from_generator(sub, cnu, "P1", name="i")
    q = ModuleMap.from_generator(cnu, quot, "1", name="q")
    window = (2, 12)
    report = les_rank_check(i, q, minimal_resolution(sub, *window), minimal_resolution(cnu, *window),
                            minimal_resolution(quot, *window))
    assert report.passed, f"LES should be exact: {report.problems}"
    assert report.to_dict()["passed"]

    print("  ✓ Long exact sequence tests passed")
    return True


def test_read_off_groups():
    """Test reading groups off h0-towers and the collapse check."""
    print("Testing read-off...")

    a0 = standard_algebra("A(0)")
    tower = ext_ranks(minimal_resolution(trivial_module(a0), 6, 6), ["h0"])
    assert s_bound(tower, 0) == 6
    assert read_off_groups(tower, 0).render() == "Z", "A tower reaching the window edge is Z"
    assert read_off_groups(tower, 1).render() == "0"
    try:
        read_off_groups(tower, 7)
        assert False, "Stems past t_max should be refused"
    except WindowError:
        pass

    free = ext_ranks(minimal_resolution(free_module(a0), 4, 4), ["h0"])
    assert read_off_groups(free, 0).render() == "Z/2"

    no_h0 = ext_ranks(minimal_resolution(trivial_module(a0), 4, 4), [])
    try:
        read_off_groups(no_h0, 0)
        assert False, "Read-off without h0 products should be refused"
    except InputError:
        pass

    a1 = standard_algebra("A(1)")
    chart = ext_ranks(minimal_resolution(trivial_module(a1), 6, 12), ["h0", "h1"])
    assert read_off_groups(chart, 1).render() == "Z/2"
    assert read_off_groups(chart, 2).render() == "Z/2"
    assert read_off_groups(chart, 3).render() == "0"
    assert read_off_groups(chart, 4).render() == "Z"

    # ko has no room for differentials in low stems once h0-linearity is used
    found = collapse_check(chart, r_max=3, use_h0_linearity=True, stem_max=5)
    assert found == [], f"unexpected candidates {found}"
    try:
        collapse_check(chart, r_max=1)
        assert False, "r_max below 2 should be refused"
    except InputError:
        pass

    print("  ✓ Read-off tests passed")
    return True


def run_all_tests():
    """Run all resolution tests."""
    print("=" * 50)
    print("Running Resolution Tests")
    print("=" * 50)
    print()

    tests = [
        ("Minimal Resolutions", test_minimal_resolution),
        ("Resolution Windows", test_resolution_window),
        ("Charts and Products", test_charts_and_products),
        ("Yoneda Products", test_yoneda_products),
        ("Chain Maps", test_chain_maps),
        ("Long Exact Sequences", test_long_exact_sequence),
        ("Read-off", test_read_off_groups),
    ]

    passed = 0
    failed = 0

    for name, test_func in tests:
        try:
            result = test_func()
            if result:
                passed += 1
            else:
                failed += 1
        except Exception as e:
            print(f"  ✗ {name} test failed with error: {e}")
            failed += 1
        print()

    print("=" * 50)
    print(f"Test Results: {passed} passed, {failed} failed")
    print("=" * 50)

    return failed == 0


if __name__ == "__main__":
    try:
        success = run_all_tests()
        sys.exit(0 if success else 1)
    except KeyboardInterrupt:
        print("\nTests interrupted by user")
        sys.exit(1)
