"""
Scenario runner.

A twist-scenario preset names how to build its module (a twist, a vector
bundle, an explicit module or a short exact sequence), the window to
resolve, and expected values. Each expected key is a metric computed from
the scenario; mismatches fail the run and are never written back.
"""
import logging
import re
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from common.errors import InputError, ScenarioMismatch, ValidationError
from common.models import CheckResult, ScenarioResult
from common.telemetry import tracer
from fp_linalg.matrix import DTYPE
from graded_algebra.catalog import standard_algebra
from graded_module.module import GradedModule, ModuleMap, tensor_product, trivial_module, validate_module
from graded_module.ses import check_ses
from resolution_engine.chain_maps import ext_class, yoneda_product
from resolution_engine.chart import ExtChart, ext_generators, ext_ranks, h0_failures, h0_unchecked
from resolution_engine.les import les_rank_check
from resolution_engine.readoff import collapse_check, read_off_groups, s_bound
from resolution_engine.resolution import FreeResolution, minimal_resolution
from twist_builder.cohomology import CohomologyPresentation
from twist_builder.twists import (SwClassData, TwistData, alternate_identification, build_twisted_module,
                                  thom_module_from_sw, total_sw_class, twist_from_sw)
from cli_corpus.presets import Preset, build_module, get_preset, load_preset, preset_names

logger = logging.getLogger("corpus")

# named classes of Ext(F_p) by prime
NAMED_CLASSES = {
    2: {"h0": (1, 1), "h1": (1, 2), "h2": (1, 4)},
    3: {"h0": (1, 1), "alpha": (1, 4), "c4": (2, 10), "beta": (2, 12), "c6": (3, 15)},
}

# algebra used for each twist target
TARGET_ALGEBRAS = {"HZ": "A(0)", "ku": "E(1)", "ko": "A(1)", "tmf2": "A(2)", "tmf3": "Atmf"}

ACTION_KEY = re.compile(r"^(?P<op>[\w()*,]+)\((?P<label>.+)\)$")


def _generator_image(target: GradedModule, image):
    """A target label, or {"degree": d} for the first basis element in degree d."""
    if isinstance(image, dict):
        indices = target.degree_indices(int(image["degree"]))
        if not indices:
            raise InputError(f"module {target.name} has nothing in degree {image['degree']}")
        return target.basis_vector(indices[0])
    return image


class ScenarioContext:
    """Lazily built objects of one scenario run."""

    def __init__(self, preset: Preset):
        self.preset = preset
        self.payload = preset.payload
        window = self.payload.get("window", {})
        self.s_max = int(window.get("s_max", 4))
        self.t_max = window.get("t_max")
        self.notes: Dict[str, Any] = {}
        self._cache: Dict[str, Any] = {}

    def _cached(self, key: str, build: Callable[[], Any]):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    @property
    def cohomology(self) -> Optional[CohomologyPresentation]:
        if "cohomology" not in self.payload:
            return None
        return self._cached("cohomology", lambda: load_preset(self.payload["cohomology"]))

    @property
    def twist(self) -> Optional[TwistData]:
        entry = self.payload.get("twist")
        if entry is None:
            return None

        def build():
            twist = TwistData.from_dict(entry)
            if entry.get("alternate"):
                twist = alternate_identification(self.cohomology, twist)
            return twist
        return self._cached("twist", build)

    @property
    def sw(self) -> Optional[SwClassData]:
        entry = self.payload.get("bundle")
        if entry is None:
            return None

        def build():
            if "factors" in entry:
                return total_sw_class(self.cohomology, entry["factors"])
            return SwClassData({int(i): expr for i, expr in entry["sw"].items()})
        return self._cached("sw", build)

    @property
    def module(self) -> GradedModule:
        return self._cached("module", self._build_module)

    def _build_module(self) -> GradedModule:
        payload = self.payload
        name = payload.get("module_name", self.preset.name)
        if "module" in payload:
            entry = payload["module"]
            module = load_preset(entry) if isinstance(entry, str) else build_module(entry, name)
        elif "ses" in payload:
            module = self.ses_modules[1]
        elif self.twist is not None:
            alg = standard_algebra(payload.get("algebra", TARGET_ALGEBRAS[self.twist.target]))
            module = build_twisted_module(self.cohomology, self.twist, alg, name)
        elif self.sw is not None:
            module = thom_module_from_sw(self.cohomology, self.sw, standard_algebra(payload.get("algebra", "A(1)")))
        else:
            raise InputError(f"scenario {self.preset.name} does not say how to build its module")
        if "tensor" in payload:
            module = tensor_product(module, load_preset(payload["tensor"]["with"]), name)
        return module

    @property
    def ses_modules(self) -> Tuple[GradedModule, GradedModule, GradedModule]:
        def build():
            entry = self.payload["ses"]
            return tuple(load_preset(entry[key]) if isinstance(entry[key], str) else build_module(entry[key])
                         for key in ("sub", "mid", "quot"))
        return self._cached("ses_modules", build)

    @property
    def ses_maps(self) -> Tuple[ModuleMap, ModuleMap]:
        def build():
            entry = self.payload["ses"]
            sub, mid, quot = self.ses_modules
            return (ModuleMap.from_generator(sub, mid, _generator_image(mid, entry["inclusion"]), name="i"),
                    ModuleMap.from_generator(mid, quot, _generator_image(quot, entry.get("quotient", "1")),
                                             name="q"))
        return self._cached("ses_maps", build)

    def window_for(self, module: GradedModule) -> Tuple[int, int]:
        t_max = self.t_max
        if t_max is None:
            if module.truncation_degree is None:
                raise InputError(f"scenario {self.preset.name}: complete module needs an explicit t_max")
            t_max = module.truncation_degree
        return self.s_max, int(t_max)

    def resolve(self, module: GradedModule, key: str) -> FreeResolution:
        return self._cached(f"resolution:{key}", lambda: minimal_resolution(module, *self.window_for(module)))

    @property
    def resolution(self) -> FreeResolution:
        return self.resolve(self.module, "main")

    @property
    def ground(self) -> FreeResolution:
        def build():
            if self.module.dim == 1 and self.module.degrees[0] == 0:
                return self.resolution
            F = trivial_module(self.module.algebra)
            s_max, t_max = self.window_for(self.module)
            return minimal_resolution(F, s_max, t_max - (self.module.min_degree or 0))
        return self._cached("ground", build)

    @property
    def chart(self) -> ExtChart:
        def build():
            products = self.payload.get("products")
            needs_ground = any(p in ("beta", "c4") for p in products or [])
            return ext_ranks(self.resolution, products, self.ground if needs_ground else None, self.preset.name)
        return self._cached("chart", build)


# -- metrics ---------------------------------------------------------------------

def _module_vector(m: GradedModule, text: str) -> np.ndarray:
    v = np.zeros(m.dim, dtype=DTYPE)
    text = text.strip()
    if text == "0":
        return v
    for term in text.split("+"):
        term = term.strip()
        head, _, rest = term.partition("*")
        if head.isdigit() and rest:
            coeff, label = int(head), rest
        else:
            coeff, label = 1, term
        v[m.index_of(label)] += coeff
    return v % m.prime


def metric_dims(ctx: ScenarioContext, params: dict):
    m = ctx.module
    top = params.get("upto", m.truncation_degree if m.truncation_degree is not None else m.max_degree)
    return m.dims(0, int(top))


def metric_valid(ctx: ScenarioContext, params: dict):
    return validate_module(ctx.module).valid


def metric_actions(ctx: ScenarioContext, params: dict, expected: Dict[str, str] = None):
    """{"Sq2(U·b)": "U·d + U·b*beta"} -> the computed images, reformatted."""
    m = ctx.module
    alg = m.algebra
    actual = {}
    for key in expected or params.get("keys", []):
        match = ACTION_KEY.match(key)
        if not match:
            raise InputError(f"action key {key!r} is not of the form Op(label)")
        op = alg.parse(match.group("op")) if match.group("op") not in alg.generator_names else None
        source = m.basis_vector(m.index_of(match.group("label")))
        image = m.actions[match.group("op")] @ source % m.prime if op is None else m.act(op, source)
        actual[key] = m.format_vector(image)
    return actual


def metric_ext_ranks(ctx: ScenarioContext, params: dict, expected: Dict[str, List[int]] = None):
    chart = ctx.chart
    stems = [int(k) for k in expected] if expected else range(int(params.get("stem_max", 0)) + 1)
    return {str(stem): [chart.at(stem, s) for s in range(s_bound(chart, stem) + 1)] for stem in stems}


def metric_ext_rank_at(ctx: ScenarioContext, params: dict, expected: Dict[str, int] = None):
    r = ctx.resolution
    actual = {}
    for key in expected or {}:
        s, t = (int(x) for x in key.split(","))
        r.require(s, t)
        actual[key] = r.rank(s, t)
    return actual


def metric_total_rank(ctx: ScenarioContext, params: dict):
    return ctx.chart.total_rank()


def metric_groups(ctx: ScenarioContext, params: dict, expected: Dict[str, str] = None):
    stems = [int(k) for k in expected] if expected else range(int(params.get("stem_max", 0)) + 1)
    return {str(stem): read_off_groups(ctx.chart, stem).render() for stem in stems}


def metric_possible_differentials(ctx: ScenarioContext, params: dict):
    found = collapse_check(ctx.chart, int(params.get("r_max", 5)), bool(params.get("h0_linearity", False)),
                           params.get("stem_max"))
    for d in found:
        logger.info("possible d%d from %s to %s", d.r, d.source, d.target)
    return len(found)


def metric_h0_injective(ctx: ScenarioContext, params: dict):
    stem_max = int(params.get("stem_max", ctx.chart.t_max))
    unchecked = h0_unchecked(ctx.chart, stem_max)
    if unchecked:
        ctx.notes["h0 unchecked (target outside window)"] = sorted([s, t] for s, t in unchecked)
    return not h0_failures(ctx.chart, stem_max)


def metric_ext_generators(ctx: ScenarioContext, params: dict):
    generators = ext_generators(ctx.chart, ring=bool(params.get("ring", True)))
    return sorted([s, t] for (s, t) in generators)


def metric_yoneda_zero(ctx: ScenarioContext, params: dict):
    """Whether every listed product of named classes of Ext(F_p) vanishes."""
    ground = ctx.resolution
    named = NAMED_CLASSES[ground.prime]
    for left, right in params.get("pairs", []):
        cls = ext_class(ground, *named[left])
        _, _, product = yoneda_product(ground, ground, cls, ext_class(ground, *named[right]))
        if product.any():
            logger.info("%s * %s is nonzero", left, right)
            return False
    return True


def metric_ses_exact(ctx: ScenarioContext, params: dict):
    return check_ses(*ctx.ses_maps).passed


def metric_les_exact(ctx: ScenarioContext, params: dict):
    sub, mid, quot = ctx.ses_modules
    i, q = ctx.ses_maps
    report = les_rank_check(i, q, ctx.resolve(sub, "sub"), ctx.resolve(mid, "mid"), ctx.resolve(quot, "quot"))
    for problem in report.problems:
        logger.info("les: %s", problem)
    return report.passed


def metric_sw_agreement(ctx: ScenarioContext, params: dict):
    """Twist builder and Thom module from Stiefel-Whitney classes agree on every generator."""
    pres, sw = ctx.cohomology, ctx.sw
    for target in params.get("targets", ["ko", "tmf2"]):
        alg = standard_algebra(TARGET_ALGEBRAS[target])
        twisted = build_twisted_module(pres, twist_from_sw(pres, sw, target), alg)
        thom = thom_module_from_sw(pres, sw, alg)
        for g_name in alg.generator_names:
            if not np.array_equal(twisted.actions[g_name], thom.actions[g_name]):
                logger.info("%s twist differs from the Thom module on %s", target, g_name)
                return False
    return True


def metric_tensor_ranks_agree(ctx: ScenarioContext, params: dict):
    """Ext ranks of the tensored module equal the untensored ones below a stem."""
    stem_below = int(params.get("stem_below", 8))
    untensored_payload = dict(ctx.payload)
    untensored_payload.pop("tensor")
    plain = ScenarioContext(Preset(ctx.preset.name + "-plain", ctx.preset.kind, untensored_payload))
    s_max, t_max = ctx.window_for(ctx.module)
    base = minimal_resolution(plain.module, s_max, min(t_max, plain.window_for(plain.module)[1]))
    tensored = ctx.resolution
    for s in range(s_max + 1):
        for t in range(base.t_min, min(base.t_max, tensored.t_max) + 1):
            if t - s < stem_below and base.rank(s, t) != tensored.rank(s, t):
                logger.info("ranks differ at (s=%d, t=%d)", s, t)
                return False
    return True


METRICS: Dict[str, Callable] = {
    "dims": metric_dims,
    "valid": metric_valid,
    "actions": metric_actions,
    "ext_ranks": metric_ext_ranks,
    "ext_rank_at": metric_ext_rank_at,
    "total_rank": metric_total_rank,
    "groups": metric_groups,
    "possible_differentials": metric_possible_differentials,
    "h0_injective": metric_h0_injective,
    "ext_generators": metric_ext_generators,
    "yoneda_zero": metric_yoneda_zero,
    "ses_exact": metric_ses_exact,
    "les_exact": metric_les_exact,
    "sw_agreement": metric_sw_agreement,
    "tensor_ranks_agree": metric_tensor_ranks_agree,
}

# metrics that compare entry by entry against a dict of expected values
KEYED_METRICS = {"actions", "ext_ranks", "ext_rank_at", "groups"}


def _matches(metric: str, expected, actual, module: Optional[GradedModule]) -> bool:
    if metric == "actions":
        return all(np.array_equal(_module_vector(module, expected[k]), _module_vector(module, actual[k]))
                   for k in expected)
    return expected == actual


def report_sq3(ctx: ScenarioContext, label: str) -> str:
    """Sq3 on a module class: zero, nonzero, or undetermined when it leaves the window."""
    m = ctx.module
    i = m.index_of(label)
    if m.truncation_degree is not None and m.degrees[i] + 3 > m.truncation_degree:
        return "undetermined in window"
    image = m.act(m.algebra.parse("Sq1*Sq2"), m.basis_vector(i))
    return "nonzero" if image.any() else "zero"


def run_scenario(name: str, strict: bool = False) -> ScenarioResult:
    """Compute every expected metric of a scenario preset and compare.

    Args:
        name: preset name
        strict: raise ScenarioMismatch on the first failing check

    Returns:
        ScenarioResult with one CheckResult per expected key
    """
    preset = get_preset(name)
    if preset.kind != "twist-scenario":
        raise InputError(f"preset {name} is a {preset.kind}, not a scenario")
    ctx = ScenarioContext(preset)
    result = ScenarioResult(name)
    with tracer.start_as_current_span("scenario_run") as span:
        span.set_attribute("scenario", name)
        for metric, expected in preset.expected.items():
            if metric not in METRICS:
                raise InputError(f"scenario {name}: unknown metric {metric!r}")
            compute = METRICS[metric]
            if metric in KEYED_METRICS:
                actual = compute(ctx, expected.params, expected.value)
            else:
                actual = compute(ctx, expected.params)
            module = ctx.module if metric == "actions" else None
            passed = _matches(metric, expected.value, actual, module)
            result.checks.append(CheckResult(metric, expected.value, actual, expected.provenance, passed))
            if not passed:
                logger.warning("scenario %s: %s expected %r, got %r", name, metric, expected.value, actual)
                if strict:
                    raise ScenarioMismatch(f"scenario {name}: {metric} expected {expected.value!r}, got {actual!r}",
                                           result)
        result.notes.update(ctx.notes)
        if "report_sq3" in preset.payload:
            label = preset.payload["report_sq3"]
            result.notes[f"Sq3({label})"] = report_sq3(ctx, label)
        span.set_attribute("checks", len(result.checks))
        span.set_attribute("passed", result.passed)
    return result


def _object_facts(preset: Preset) -> Dict[str, Callable[[], Any]]:
    obj = load_preset(preset.name)
    if preset.kind == "algebra":
        return {"dimension": lambda: obj.dim, "dims_by_degree": lambda: obj.dims_by_degree()}
    if preset.kind == "module":
        report = validate_module(obj)
        return {
            "degrees": lambda: sorted(obj.degrees),
            "valid": lambda: report.valid,
            "witness": lambda: report.violations[0].witness if report.violations else None,
        }
    return {"dims": lambda: obj.dims()}


def verify_preset(name: str) -> ScenarioResult:
    """Check the expected values of an algebra, module or cohomology preset."""
    preset = get_preset(name)
    if preset.kind == "twist-scenario":
        return run_scenario(name)
    facts = _object_facts(preset)
    result = ScenarioResult(name)
    for key, expected in preset.expected.items():
        if key not in facts:
            raise InputError(f"preset {name}: {preset.kind} presets have no value {key!r}")
        actual = facts[key]()
        passed = actual == expected.value
        result.checks.append(CheckResult(key, expected.value, actual, expected.provenance, passed))
        if not passed:
            logger.warning("preset %s: %s expected %r, got %r", name, key, expected.value, actual)
    return result


def scenario_names() -> List[str]:
    return preset_names("twist-scenario")


def require_passed(result: ScenarioResult):
    if not result.passed:
        failure = result.failures()[0]
        raise ScenarioMismatch(f"scenario {result.name}: {failure.name} expected {failure.expected!r}, "
                               f"got {failure.actual!r} ({len(result.failures())} failing checks)", result)
