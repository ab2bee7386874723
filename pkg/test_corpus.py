#!/usr/bin/env python3
"""
Corpus tests: presets, scenarios, chart output, persistence and the command line
Run with: python test_corpus.py
"""

import io
import json
import sys
import tempfile
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path

# Add project root to path
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from common.errors import InputError, ScenarioMismatch, SchemaError, UnknownPresetError
from common.models import CheckResult, ScenarioResult
from chart_io import serialize
from chart_io.ascii_chart import emit_ascii, parse_ascii
from chart_io.svg_builder import emit_svg
from graded_algebra.catalog import standard_algebra
from graded_module.module import trivial_module
from resolution_engine.chart import ExtChart, ext_ranks
from resolution_engine.resolution import minimal_resolution
from cli_corpus.main import run_command
from cli_corpus.presets import Preset, get_preset, load_preset, preset_names
from cli_corpus.scenarios import require_passed, run_scenario, scenario_names, verify_preset


def _a1_chart() -> ExtChart:
    a1 = standard_algebra("A(1)")
    return ext_ranks(minimal_resolution(trivial_module(a1), 4, 8), ["h0", "h1"], name="F2")


def _run_quiet(argv):
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = run_command(argv)
    return code, out.getvalue(), err.getvalue()


def test_preset_registry():
    """Test preset lookup and schema checks."""
    print("Testing preset registry...")

    names = preset_names()
    for name in ("a1", "atmf", "a1-seagull", "su8-cohomology", "u-duality-su8", "pin-minus"):
        assert name in names, f"{name} should be shipped"
    assert "u-duality-su8" in scenario_names()
    assert "a1" not in scenario_names()

    preset = get_preset("u-duality-su8")
    assert preset.kind == "twist-scenario"
    assert all(v.provenance.split(":")[0] in ("PAPER", "DERIVED", "TRIVIAL", "REGRESSION")
               for v in preset.expected.values())

    try:
        get_preset("no-such-preset")
        assert False, "Unknown presets should be rejected"
    except UnknownPresetError:
        pass

    try:
        Preset.from_dict({"name": "x", "kind": "module", "payload": {},
                          "expected": {"dims": {"value": [1], "provenance": "GUESS"}}})
        assert False, "Untagged expected values should be rejected"
    except SchemaError as e:
        assert e.path == "$.expected.dims.provenance"

    print("  ✓ Preset registry tests passed")
    return True


def test_object_presets():
    """Test every algebra, module and cohomology preset against its expected values."""
    print("Testing object presets...")

    checked = 0
    for name in preset_names():
        if get_preset(name).kind == "twist-scenario":
            continue
        result = verify_preset(name)
        assert result.passed, f"{name}: {[c.to_dict() for c in result.failures()]}"
        checked += 1
    assert checked >= 20

    seagull = load_preset("a1-seagull")
    assert sorted(seagull.degrees) == [0, 2, 3, 5]
    assert load_preset("su8-cohomology").dims()[:6] == [1, 0, 1, 1, 2, 2]

    print(f"  ✓ Object preset tests passed ({checked} presets)")
    return True


def test_scenarios():
    """Test a selection of twist scenarios end to end."""
    print("Testing scenarios...")

    result = run_scenario("u-duality-su8")
    assert result.passed, f"u-duality-su8: {[c.to_dict() for c in result.failures()]}"
    groups = next(c for c in result.checks if c.name == "groups")
    assert groups.actual == {"0": "Z", "1": "0", "2": "0", "3": "0", "4": "Z^2", "5": "Z/2"}
    assert result.notes["Sq3(U·c)"] == "undetermined in window"

    for name in ("cnu-ses", "bundle-cp2", "u2-ku"):
        result = run_scenario(name)
        assert result.passed, f"{name}: {[c.to_dict() for c in result.failures()]}"

    try:
        run_scenario("a1")
        assert False, "Object presets are not scenarios"
    except InputError:
        pass

    failing = ScenarioResult("demo", [CheckResult("total_rank", 1, 2, "REGRESSION: demo", False)])
    try:
        require_passed(failing)
        assert False, "A failing check should raise"
    except ScenarioMismatch as e:
        assert e.exit_code == 1

    print("  ✓ Scenario tests passed")
    return True


def test_every_scenario():
    """Re-verify the expected-results block of every shipped scenario."""
    print("Testing every scenario...")

    names = scenario_names()
    assert len(names) == 14
    failed = {}
    for name in names:
        result = run_scenario(name)
        if not result.passed:
            failed[name] = [c.to_dict() for c in result.failures()]
        if name == "atmf-ext":
            generators = next(c for c in result.checks if c.name == "ext_generators")
            assert generators.actual == [[1, 1], [1, 4], [2, 10], [2, 12], [3, 15]], \
                f"the unit should not count as a ring generator: {generators.actual}"
        if name == "heterotic-e8":
            assert "h0 unchecked (target outside window)" in result.notes, \
                "cells at t = t_max cannot be checked for h0 and should be listed"
    assert not failed, f"failing scenarios: {failed}"

    print(f"  ✓ Every scenario passed ({len(names)} scenarios)")
    return True


def test_ascii_and_svg_charts():
    """Test the text and SVG chart renderers."""
    print("Testing chart rendering...")

    chart = _a1_chart()
    text = emit_ascii(chart)
    assert text.startswith("# chart F2 prime=2 s_max=4 t_max=8 t_min=0")
    assert "?" in text, "Cells past t_max should be marked"
    ranks, window = parse_ascii(text)
    assert window["s_max"] == 4 and window["t_max"] == 8
    assert ranks == {cell: n for cell, n in chart.ranks.items() if n}

    svg = emit_svg(chart)
    assert svg.startswith('<?xml version="1.0" standalone="no"?>')
    assert svg.count('class="dot"') == chart.total_rank()
    assert svg.count('class="edge h1"') == 2, "h1 and h1^2 edges"
    assert 'class="masked"' in svg
    assert emit_svg(chart) == svg, "Rendering should be deterministic"

    try:
        parse_ascii("not a chart")
        assert False, "Text without a header should be rejected"
    except InputError:
        pass

    print("  ✓ Chart rendering tests passed")
    return True


def test_serialization():
    """Test versioned JSON documents and their schema errors."""
    print("Testing serialization...")

    a1 = standard_algebra("A(1)")
    assert serialize.structurally_equal(serialize.roundtrip(a1), a1)

    seagull = load_preset("a1-seagull")
    restored = serialize.roundtrip(seagull)
    assert restored == seagull

    r = minimal_resolution(seagull, 3, 8)
    restored = serialize.roundtrip(r)
    assert restored.ranks() == r.ranks()
    assert restored.content_hash() == r.content_hash()

    chart = _a1_chart()
    assert serialize.roundtrip(chart) == chart

    twisted = serialize.roundtrip(load_preset("su8-cohomology"))
    assert twisted.dims() == load_preset("su8-cohomology").dims()

    try:
        serialize.check_document({"format": 2, "kind": "chart", "data": {}})
        assert False, "Unknown format versions should be rejected"
    except SchemaError as e:
        assert e.path == "$.format"

    document = {
        "format": 1, "kind": "resolution",
        "data": {"s_max": 1, "t_max": 2, "module": {},
                 "stages": [{"generators": []}, {"generators": [{"label": "x"}]}]},
    }
    try:
        serialize.check_document(document)
        assert False, "A generator without a degree should be rejected"
    except SchemaError as e:
        assert e.path == "$.data.stages[1].generators[0].degree"

    try:
        serialize.loads("{not json")
        assert False, "Invalid JSON should be rejected"
    except SchemaError as e:
        assert e.path == "$"

    print("  ✓ Serialization tests passed")
    return True


def test_command_line():
    """Test exit codes and outputs of the command line."""
    print("Testing command line...")

    code, out, _ = _run_quiet(["algebra", "info", "A(1)"])
    assert code == 0 and "dimension:   8" in out

    code, _, err = _run_quiet(["module", "validate", "--preset", "corrupted-sq1"])
    assert code == 1, "An invalid module should exit 1"
    trailer = json.loads(err.strip().splitlines()[-1])
    assert trailer == {"status": "error", "kind": "validation", "exit_code": 1}

    code, _, err = _run_quiet(["resolve", "--preset", "w3", "--max-t", "12"])
    assert code == 2, "t_max above the truncation should exit 2"
    assert "error: " in err
    assert json.loads(err.strip().splitlines()[-1])["kind"] == "window"

    code, _, _ = _run_quiet(["scenario", "run", "no-such-preset"])
    assert code == 2

    code, _, _ = _run_quiet(["frobnicate"])
    assert code == 2, "Unknown commands are malformed input"

    code, out, _ = _run_quiet(["readoff", "--scenario", "u-duality-su8", "--stem-max", "5"])
    assert code == 0
    assert "stem 4: Z^2" in out and "stem 5: Z/2" in out

    with tempfile.TemporaryDirectory() as tmp:
        svg_path = Path(tmp) / "seagull.svg"
        code, _, _ = _run_quiet(["chart", "--preset", "a1-seagull", "--max-s", "3", "--max-t", "8",
                                 "--products", "h0,h1", "--format", "svg", "--out", str(svg_path)])
        assert code == 0 and svg_path.read_text().count("<circle") > 0

        saved = Path(tmp) / "seagull.json"
        code, _, _ = _run_quiet(["resolve", "--preset", "a1-seagull", "--max-s", "2", "--max-t", "6",
                                 "--out", str(saved)])
        assert code == 0
        code, out, _ = _run_quiet(["resolve", "--preset", "a1-seagull", "--max-s", "3", "--max-t", "8",
                                   "--resume", str(saved)])
        assert code == 0 and "t <= 8" in out

    code, out, _ = _run_quiet(["twist", "apply", "--cohomology", "su8-cohomology", "--target", "ko",
                               "--class", "b=beta"])
    assert code == 0 and "Sq2(U) = U·beta" in out

    code, _, _ = _run_quiet(["module", "validate", "--preset", "a1-seagull", "--prime", "3"])
    assert code == 2, "A prime mismatch is malformed input"

    print("  ✓ Command line tests passed")
    return True


def run_all_tests():
    """Run all corpus tests."""
    print("=" * 50)
    print("Running Corpus Tests")
    print("=" * 50)
    print()

    tests = [
        ("Preset Registry", test_preset_registry),
        ("Object Presets", test_object_presets),
        ("Scenarios", test_scenarios),
        ("Every Scenario", test_every_scenario),
        ("Chart Rendering", test_ascii_and_svg_charts),
        ("Serialization", test_serialization),
        ("Command Line", test_command_line),
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
