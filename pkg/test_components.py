#!/usr/bin/env python3
"""
Component-level tests for the linear algebra, algebra, module and twist packages
Run with: python test_components.py
"""

import sys
from pathlib import Path

# Add project root to path
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

import numpy as np

from common.errors import AlgebraError, InputError
from common.models import ValidationReport
from fp_linalg.matrix import (EchelonForm, FpMatrix, check_prime, inverse_mod, kernel_array, kernel_basis,
                              rank, rank_array, rref, rref_array, solve_array)
from graded_algebra.algebra import FiniteGradedAlgebra, check_associativity, word_kernel
from graded_algebra.catalog import standard_algebra
from graded_algebra.milnor import milnor_product
from graded_module.module import (GradedModule, ModuleMap, cyclic_module, direct_sum, suspend, tensor_product,
                                  trivial_module, truncate, validate_module)
from graded_module.ses import check_ses
from twist_builder.cohomology import consistency_check, polynomial_presentation
from twist_builder.twists import (SwClassData, TwistData, alternate_identification, build_twisted_module,
                                  thom_module_from_sw, total_sw_class, twist_from_sw)
from cli_corpus.presets import load_preset


def test_fp_linear_algebra():
    """Test rank, kernels and solving over F_2 and F_3."""
    print("Testing F_p linear algebra...")

    # det = 1 - 4 = -3 vanishes mod 3
    assert rank_array([[1, 2], [2, 1]], 3) == 1
    assert rank_array([[1, 1], [0, 1]], 2) == 2
    assert rank_array(np.zeros((0, 3)), 2) == 0

    a = np.array([[1, 1, 0], [0, 1, 1]])
    kernel = kernel_array(a, 2)
    assert kernel.shape == (1, 3)
    assert not (a @ kernel.T % 2).any(), "Kernel rows should be annihilated"

    x = solve_array([[1, 0], [0, 1]], [1, 2], 3)
    assert list(x) == [1, 2]
    assert solve_array([[1], [1]], [1, 0], 2) is None, "Inconsistent system should have no solution"

    m = FpMatrix.from_rows([[1, 2], [2, 1]], 3)
    reduced, pivots, r = rref(m)
    assert r == 1 and pivots == [0]
    assert rank(m) == 1
    assert kernel_basis(m).rows == 1

    assert inverse_mod(2, 3) == 2
    try:
        check_prime(5)
        assert False, "Prime 5 should be rejected"
    except InputError:
        pass

    echelon = EchelonForm(3, 2)
    assert echelon.add([1, 1, 0])
    assert echelon.add([0, 1, 1])
    assert echelon.contains([1, 0, 1])
    assert not echelon.add([1, 0, 1])
    assert echelon.rank == 2

    print("  ✓ F_p linear algebra tests passed")
    return True


def test_fp_properties():
    """Test rank-nullity, rref idempotence and solving on random matrices over F_2 and F_3."""
    print("Testing F_p properties on random matrices...")

    rng = np.random.default_rng(7)
    for p in (2, 3):
        for _ in range(10000):
            rows, cols = (int(n) for n in rng.integers(1, 9, size=2))
            m = rng.integers(0, p, size=(rows, cols))
            reduced, pivots = rref_array(m, p)
            assert pivots == sorted(set(pivots)), "Pivot columns should strictly increase"

            kernel = kernel_array(m, p)
            assert len(pivots) + kernel.shape[0] == cols, f"rank + nullity != {cols} over F_{p}"
            assert not (m @ kernel.T % p).any()

            again, again_pivots = rref_array(reduced, p)
            assert np.array_equal(again, reduced) and again_pivots == pivots, "rref should be idempotent"

            x = rng.integers(0, p, size=cols)
            b = m @ x % p
            y = solve_array(m, b, p)
            assert y is not None, "A vector in the column space should be solvable"
            assert np.array_equal(m @ y % p, b)

    print("  ✓ F_p property tests passed (10000 matrices per prime)")
    return True


def test_milnor_algebras():
    """Test the Milnor-basis subalgebras of the catalog."""
    print("Testing Milnor subalgebras...")

    a0 = standard_algebra("A(0)")
    e1 = standard_algebra("E(1)")
    a1 = standard_algebra("A(1)")
    a2 = standard_algebra("A(2)")
    assert a0.dim == 2
    assert e1.dim == 4 and e1.dims_by_degree() == [1, 1, 0, 1, 1]
    assert a1.dim == 8 and a1.dims_by_degree() == [1, 1, 1, 2, 1, 1, 1]
    assert a2.dim == 64
    assert a1.generator_names == ["Sq1", "Sq2"]
    assert standard_algebra("a1") is a1, "Aliases should hit the cache"

    # Sq1 Sq2 = Sq(3), Sq2 Sq1 = Sq(3) + Sq(0,1)
    assert milnor_product((1,), (2,)) == {(3,): 1}
    assert a1.format_element(a1.parse("Sq1*Sq2")) == "Sq(3)"
    assert not a1.parse("Sq1*Sq1").any(), "Sq1 Sq1 should vanish"
    assert np.array_equal(a1.parse("Sq2*Sq2"), a1.parse("Sq1*Sq2*Sq1")), "Adem relation Sq2 Sq2 = Sq3 Sq1"
    assert check_associativity(a1) == []
    assert check_associativity(a2, samples=10000) == [], "A(2) should be associative on sampled triples"

    # degree 4 words Q0^4, Q0 Q1, Q1 Q0 satisfy two relations
    assert word_kernel(e1, 4).rows == 2

    restored = FiniteGradedAlgebra.from_dict(a1.to_dict())
    assert restored == a1
    assert restored.content_hash() == a1.content_hash()

    try:
        standard_algebra("A(7)")
        assert False, "Unknown algebra should be rejected"
    except InputError:
        pass

    print("  ✓ Milnor subalgebra tests passed")
    return True


def test_presented_algebras():
    """Test the algebras built from generators and relations."""
    print("Testing presented algebras...")

    atmf = standard_algebra("Atmf")
    assert atmf.prime == 3
    assert atmf.dim == 24
    assert atmf.generator_names == ["beta", "P1"]
    assert not atmf.parse("beta*beta").any()
    assert not atmf.parse("P1*P1*P1").any()
    assert atmf.parse("beta*P1").any() and atmf.parse("P1*beta").any()
    assert check_associativity(atmf, samples=10000) == []

    presented = standard_algebra("E(1)-presented")
    assert presented.dim == 4
    assert presented.dims_by_degree() == standard_algebra("E(1)").dims_by_degree()

    print("  ✓ Presented algebra tests passed")
    return True


def test_module_validation():
    """Test the module validator on valid and broken modules."""
    print("Testing module validation...")

    a1 = standard_algebra("A(1)")
    report = validate_module(trivial_module(a1))
    assert isinstance(report, ValidationReport)
    assert report.valid
    assert report.summary() == (True, None)

    corrupted = load_preset("corrupted-sq1")
    report = validate_module(corrupted)
    is_valid, message = report.summary()
    assert not is_valid, "Sq1 Sq1 != 0 should be caught"
    assert report.violations[0].witness == "m0"
    assert "m0" in message

    words = validate_module(corrupted, method="words")
    assert not words.valid, "Both validation methods should agree"

    print("  ✓ Module validation tests passed")
    return True


def test_module_constructions():
    """Test cyclic modules, sums, tensor products and suspension."""
    print("Testing module constructions...")

    a1 = standard_algebra("A(1)")
    seagull = cyclic_module(a1, ["Sq1"], name="M0")
    assert sorted(seagull.degrees) == [0, 2, 3, 5]
    assert validate_module(seagull).valid

    for algebra in ("A(0)", "E(1)", "A(1)", "A(2)", "E(1)-presented", "Atmf"):
        alg = standard_algebra(algebra)
        assert cyclic_module(alg, alg.generator_names).dim == 1, f"{algebra} mod its generators should be F_p"

    shifted = suspend(seagull, 4)
    assert sorted(shifted.degrees) == [4, 6, 7, 9]

    F = trivial_module(a1)
    total = direct_sum(F, seagull)
    assert total.dim == 5
    assert validate_module(total).valid

    product = tensor_product(F, seagull)
    assert product.dim == seagull.dim
    assert product.dims_by_degree() == seagull.dims_by_degree()
    assert validate_module(tensor_product(seagull, seagull)).valid

    ceta = load_preset("a1-ceta")
    joker_like = tensor_product(ceta, ceta)
    assert joker_like.dims_by_degree() == {0: 1, 2: 2, 4: 1}
    bottom = joker_like.basis_vector(joker_like.degree_indices(0)[0])
    middle = sum(joker_like.basis_vector(i) for i in joker_like.degree_indices(2)) % 2
    assert np.array_equal(joker_like.actions["Sq2"] @ bottom % 2, middle), "Sq2 hits both middle classes"

    left = tensor_product(tensor_product(seagull, ceta), seagull)
    right = tensor_product(seagull, tensor_product(ceta, seagull))
    assert left.dims_by_degree() == right.dims_by_degree()
    assert validate_module(left).valid and validate_module(right).valid

    cut = truncate(seagull, 3)
    assert cut.truncation_degree == 3 and sorted(cut.degrees) == [0, 2, 3]

    restored = GradedModule.from_dict(seagull.to_dict(), a1)
    assert restored == seagull

    atmf = standard_algebra("Atmf")
    assert sorted(load_preset("atmf-n1").degrees) == [0, 4, 5]
    # the ideal (beta, P1^2, beta P1 beta) leaves P1 beta P1 alive
    literal = cyclic_module(atmf, ["beta", "P1*P1", "beta*P1*beta"])
    assert 9 in literal.degrees

    print("  ✓ Module construction tests passed")
    return True


def test_short_exact_sequences():
    """Test degreewise SES checks."""
    print("Testing short exact sequences...")

    atmf = standard_algebra("Atmf")
    cnu = load_preset("atmf-cnu")
    sub = trivial_module(atmf, 4)
    quot = trivial_module(atmf)
    i = ModuleMap.from_generator(sub, cnu, "P1", name="i")
    q = ModuleMap.from_generator(cnu, quot, "1", name="q")
    assert i.commutes() == (True, None)
    report = check_ses(i, q)
    assert report.passed, f"0 -> S^4 F3 -> Cnu -> F3 -> 0 should be exact: {report.problems}"

    broken = check_ses(ModuleMap.zero(sub, cnu), q)
    assert not broken.passed, "A zero inclusion is not injective"

    print("  ✓ Short exact sequence tests passed")
    return True


def test_cohomology_presentations():
    """Test the polynomial presentation builder."""
    print("Testing cohomology presentations...")

    rp2 = polynomial_presentation(2, [("x", 1, 3)], name="RP2")
    assert rp2.dims() == [1, 1, 1]
    assert np.array_equal(rp2.apply("Sq1", rp2.parse("x")), rp2.parse("x^2")), "Sq^|x| x = x^2"

    su8 = load_preset("su8-cohomology")
    assert su8.dims() == [1, 0, 1, 1, 2, 2, 4]
    assert consistency_check(su8) == []
    assert su8.format_element(su8.apply("Sq1", su8.parse("beta"))) == "b"

    e8 = load_preset("e8e8-mod3")
    assert e8.prime == 3
    assert e8.dims() == [1, 0, 0, 0, 1, 0, 0, 0, 3, 1, 0, 0]

    try:
        polynomial_presentation(2, [("x", 1)], name="unbounded")
        assert False, "A polynomial generator without truncation should be rejected"
    except InputError:
        pass

    print("  ✓ Cohomology presentation tests passed")
    return True


def test_twisted_modules():
    """Test twisted Thom modules for ko and tmf at p = 3."""
    print("Testing twisted modules...")

    su8 = load_preset("su8-cohomology")
    module = build_twisted_module(su8, TwistData("ko", {"a": None, "b": "beta"}))
    assert module.algebra.name == "A(1)"
    assert validate_module(module).valid
    assert module.image("Sq2", "U") == "U·beta"
    assert set(module.image("Sq2", "U·b").split(" + ")) == {"U·d", "U·beta*b"}

    e8 = load_preset("e8e8-mod3")
    tmf = build_twisted_module(e8, TwistData("tmf3", {"d3": "x"}))
    assert tmf.image("P1", "U") == "U·x"
    assert tmf.image("beta", "U") == "0"

    # zero twists leave the Steenrod tables of the base
    rp2xrp2 = load_preset("rp2xrp2")
    untwisted = build_twisted_module(rp2xrp2, TwistData("tmf2", {}))
    for k in (1, 2, 4):
        assert np.array_equal(untwisted.actions[f"Sq{k}"], rp2xrp2.op(f"Sq{k}") % 2), f"Sq{k} should be untwisted"
    untwisted = build_twisted_module(e8, TwistData("tmf3", {}))
    assert np.array_equal(untwisted.actions["P1"], e8.op("P1") % 3)
    assert np.array_equal(untwisted.actions["beta"], e8.op("beta") % 3)

    bz2 = load_preset("bz2")
    ku = build_twisted_module(bz2, TwistData("ku", {"a": "t", "c2": None}))
    assert ku.image("Q1", "U") == "U·t^3", "Q1(U) = U·(c2 + a^3)"
    u2 = load_preset("u2-cohomology")
    ku = build_twisted_module(u2, TwistData("ku", {"a": "b1", "c2": "b3"}))
    assert ku.image("Q1", "U") == "U·b3", "b1^3 vanishes in U2"

    # Cartan formula on U·(xy) with Sq1 U = U·a and Sq2 U = U·b
    ko = build_twisted_module(rp2xrp2, TwistData("ko", {"a": "x + y", "b": "x*y + y^2"}))
    T1, T2 = ko.actions["Sq1"], ko.actions["Sq2"]
    S1, S2 = rp2xrp2.op("Sq1"), rp2xrp2.op("Sq2")
    mul = rp2xrp2.multiply
    for i in range(rp2xrp2.dim):
        for j in range(rp2xrp2.dim):
            x, y = rp2xrp2.basis_vector(i), rp2xrp2.basis_vector(j)
            xy = mul(x, y)
            assert np.array_equal(T1 @ xy % 2, (mul(T1 @ x, y) + mul(x, S1 @ y)) % 2)
            cartan = (mul(T2 @ x, y) + mul(T1 @ x, S1 @ y) + mul(x, S2 @ y)) % 2
            assert np.array_equal(T2 @ xy % 2, cartan), f"Sq2 on U·({rp2xrp2.labels[i]}*{rp2xrp2.labels[j]})"

    try:
        build_twisted_module(su8, TwistData("ko", {"b": "b"}))
        assert False, "A degree-3 class cannot twist b"
    except InputError:
        pass
    try:
        TwistData("KO", {})
        assert False, "Unknown targets should be rejected"
    except InputError:
        pass

    restored = TwistData.from_dict(TwistData("ko", {"b": "beta"}).to_dict())
    assert restored.classes == {"b": "beta"}

    print("  ✓ Twisted module tests passed")
    return True


def test_stiefel_whitney_twists():
    """Test that vector bundle twists match their Thom modules."""
    print("Testing Stiefel-Whitney twists...")

    cp2 = load_preset("cp2")
    sw = SwClassData({2: "alpha"})
    for target, algebra in (("ko", "A(1)"), ("tmf2", "A(2)")):
        alg = standard_algebra(algebra)
        twisted = build_twisted_module(cp2, twist_from_sw(cp2, sw, target), alg)
        thom = thom_module_from_sw(cp2, sw, alg)
        for g_name in alg.generator_names:
            assert np.array_equal(twisted.actions[g_name], thom.actions[g_name]), f"{target}: {g_name} differs"
    thom = thom_module_from_sw(cp2, sw, standard_algebra("A(2)"))
    assert thom.image("Sq2", "U") == "U·alpha"
    assert thom.image("Sq4", "U") == "0"

    rp1xrp3 = load_preset("rp1xrp3")
    total = total_sw_class(rp1xrp3, ["x", "y", "y", "y"])
    assert np.array_equal(total.classes[4], rp1xrp3.parse("x*y^3"))
    assert np.array_equal(total.classes[1], rp1xrp3.parse("x + y"))

    bz2 = load_preset("bz2")
    pin_plus = alternate_identification(bz2, TwistData("ko", {"a": "t", "b": None}))
    assert np.array_equal(pin_plus.classes["b"], bz2.parse("t^2"))

    print("  ✓ Stiefel-Whitney twist tests passed")
    return True


def run_all_tests():
    """Run all component tests."""
    print("=" * 50)
    print("Running Component Tests")
    print("=" * 50)
    print()

    tests = [
        ("F_p Linear Algebra", test_fp_linear_algebra),
        ("F_p Properties", test_fp_properties),
        ("Milnor Subalgebras", test_milnor_algebras),
        ("Presented Algebras", test_presented_algebras),
        ("Module Validation", test_module_validation),
        ("Module Constructions", test_module_constructions),
        ("Short Exact Sequences", test_short_exact_sequences),
        ("Cohomology Presentations", test_cohomology_presentations),
        ("Twisted Modules", test_twisted_modules),
        ("Stiefel-Whitney Twists", test_stiefel_whitney_twists),
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
