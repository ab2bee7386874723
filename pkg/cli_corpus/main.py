"""
Command line for algebras, modules, twists, resolutions and charts.

    python -m cli_corpus.main algebra info A(1)
    python -m cli_corpus.main resolve --preset a1-seagull --max-s 6 --max-t 20 --out r.json
    python -m cli_corpus.main chart --scenario u-duality-su8 --products h0,h1 --format svg --out su8.svg
    python -m cli_corpus.main scenario run u-duality-su8

Exit codes: 0 success, 1 validation or assertion failure, 2 malformed input.
Errors go to standard error as "error: <message>" followed by one JSON line.
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from common.errors import InputError, SteenrodLabError, ValidationError
from common.telemetry import configure_logging
from chart_io import serialize
from chart_io.ascii_chart import emit_ascii
from chart_io.svg_builder import emit_svg
from graded_algebra.catalog import standard_algebra
from graded_module.module import (GradedModule, cyclic_module, direct_sum_all, suspend, tensor_product,
                                  trivial_module, validate_module)
from resolution_engine.chart import ExtChart, ext_ranks
from resolution_engine.les import les_rank_check
from resolution_engine.readoff import collapse_check, read_off_groups
from resolution_engine.resolution import FreeResolution, minimal_resolution
from twist_builder.cohomology import CohomologyPresentation
from twist_builder.twists import TwistData, alternate_identification, build_twisted_module
from cli_corpus.presets import get_preset, load_preset, preset_names
from cli_corpus.scenarios import ScenarioContext, scenario_names, verify_preset

logger = logging.getLogger("corpus")

DEFAULT_S_MAX = 4


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as InputError instead of exiting."""

    def error(self, message):
        raise InputError(f"{self.prog}: {message}")


# -- helpers ---------------------------------------------------------------------

def _emit(text: str, out: Optional[str]):
    if out:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")
        print(f"wrote {out}")
    else:
        print(text)


def _check_prime(args, prime: int):
    if args.prime is not None and args.prime != prime:
        raise InputError(f"--prime {args.prime} does not match the object's prime {prime}")


def _products(args) -> Optional[List[str]]:
    if not args.products:
        return None
    return [p.strip() for p in args.products.split(",") if p.strip()]


def _module_from_args(args) -> GradedModule:
    """Module named by --preset, --input or --scenario."""
    if getattr(args, "scenario", None):
        module = ScenarioContext(get_preset(args.scenario)).module
    elif getattr(args, "input", None):
        module = serialize.load(args.input, "module")
    elif getattr(args, "preset", None):
        module = load_preset(args.preset)
        if not isinstance(module, GradedModule):
            raise InputError(f"preset {args.preset} is a {get_preset(args.preset).kind}, not a module")
    else:
        raise InputError("name a module with --preset, --input or --scenario")
    _check_prime(args, module.prime)
    return module


def _window(args, module: GradedModule):
    s_max, t_max = args.max_s, args.max_t
    if getattr(args, "scenario", None):
        window = get_preset(args.scenario).payload.get("window", {})
        s_max = s_max if s_max is not None else window.get("s_max")
        t_max = t_max if t_max is not None else window.get("t_max")
    if s_max is None:
        s_max = DEFAULT_S_MAX
    if t_max is None:
        if module.truncation_degree is None:
            raise InputError("--max-t is required for a module without a truncation degree")
        t_max = module.truncation_degree
    return int(s_max), int(t_max)


def _resolution_from_args(args) -> FreeResolution:
    if getattr(args, "resolution", None):
        resolution = serialize.load(args.resolution, "resolution")
        _check_prime(args, resolution.prime)
        return resolution
    module = _module_from_args(args)
    resume = serialize.load(args.resume, "resolution") if getattr(args, "resume", None) else None
    return minimal_resolution(module, *_window(args, module), resume=resume)


def _chart_from_args(args, required: Sequence[str] = ()) -> ExtChart:
    resolution = _resolution_from_args(args)
    products = _products(args)
    if products is None and getattr(args, "scenario", None):
        products = get_preset(args.scenario).payload.get("products")
    if required:
        products = list(products or []) + [p for p in required if p not in (products or [])]
    ground = None
    if any(p in ("beta", "c4") for p in products or []):
        F = trivial_module(resolution.algebra)
        ground = minimal_resolution(F, resolution.s_max, resolution.t_max - resolution.t_min)
    return ext_ranks(resolution, products, ground)


# -- commands ---------------------------------------------------------------------

def cmd_algebra(args) -> int:
    alg = standard_algebra(args.name)
    _check_prime(args, alg.prime)
    if args.action == "build":
        _emit(serialize.dumps(alg), args.out)
        return 0
    print(f"algebra:     {alg.name}")
    print(f"prime:       {alg.prime}")
    print(f"dimension:   {alg.dim}")
    print(f"top degree:  {alg.top_degree}")
    print(f"generators:  {', '.join(f'{g} ({alg.generator_degree(g)})' for g in alg.generator_names)}")
    print(f"dims:        {alg.dims_by_degree()}")
    print(f"hash:        {alg.content_hash()[:16]}")
    return 0


def _module_summary(module: GradedModule) -> str:
    dims = ", ".join(f"{d}:{n}" for d, n in module.dims_by_degree().items())
    truncation = "complete" if module.truncation_degree is None else f"trusted through {module.truncation_degree}"
    return f"{module.name or 'module'} over {module.algebra.name}: dim {module.dim} ({dims}), {truncation}"


def cmd_module(args) -> int:
    if args.action == "validate":
        module = _module_from_args(args)
        report = validate_module(module, args.method)
        is_valid, message = report.summary()
        if args.format == "json":
            print(json.dumps(report.to_dict(), indent=1))
        elif is_valid:
            print(f"valid: {_module_summary(module)}")
        if not is_valid:
            raise ValidationError(f"{module.name or 'module'}: {message}", report)
        return 0
    if args.action == "cyclic":
        alg = standard_algebra(args.algebra)
        _check_prime(args, alg.prime)
        module = cyclic_module(alg, args.annihilators, args.d_max, args.name or "")
    else:
        modules = [load_preset(name) for name in args.presets]
        for name, module in zip(args.presets, modules):
            if not isinstance(module, GradedModule):
                raise InputError(f"preset {name} is not a module")
        if args.action == "sum":
            module = direct_sum_all(modules, name=args.name or "")
        elif args.action == "tensor":
            if len(modules) != 2:
                raise InputError("module tensor takes exactly two presets")
            module = tensor_product(*modules, args.name or "")
        else:
            if len(modules) != 1:
                raise InputError("module suspend takes exactly one preset")
            module = suspend(modules[0], args.by)
    _check_prime(args, module.prime)
    if args.out or args.format == "json":
        _emit(serialize.dumps(module), args.out)
    else:
        print(_module_summary(module))
    return 0


def _parse_classes(items: Sequence[str]) -> dict:
    classes = {}
    for item in items or []:
        name, sep, value = item.partition("=")
        if not sep:
            raise InputError(f"--class expects name=expression, got {item!r}")
        value = value.strip()
        classes[name.strip()] = None if value in ("", "0") else value
    return classes


def cmd_twist(args) -> int:
    if args.cohomology_file:
        pres = serialize.load(args.cohomology_file, "cohomology")
    else:
        pres = load_preset(args.cohomology)
        if not isinstance(pres, CohomologyPresentation):
            raise InputError(f"preset {args.cohomology} is not a cohomology presentation")
    _check_prime(args, pres.prime)
    twist = TwistData(args.target, _parse_classes(args.classes))
    if args.alternate:
        twist = alternate_identification(pres, twist)
    alg = standard_algebra(args.algebra) if args.algebra else None
    module = build_twisted_module(pres, twist, alg, args.name or "")
    if args.out or args.format == "json":
        _emit(serialize.dumps(module), args.out)
        return 0
    print(_module_summary(module))
    for g_name in module.algebra.generator_names:
        for label in module.labels:
            image = module.image(g_name, label)
            if image != "0":
                print(f"  {g_name}({label}) = {image}")
    return 0


def cmd_resolve(args) -> int:
    resolution = _resolution_from_args(args)
    problems = resolution.audit() if args.audit else []
    if args.out:
        serialize.save(resolution, args.out)
    print(repr(resolution))
    for s in range(resolution.s_max + 1):
        cells = [f"{t}:{n}" for (s2, t), n in sorted(resolution.ranks().items()) if s2 == s and n]
        print(f"  s={s}: {' '.join(cells) if cells else '-'}")
    if problems:
        raise ValidationError(f"resolution audit failed: {problems[0]} ({len(problems)} problems)", problems)
    return 0


def cmd_chart(args) -> int:
    chart = _chart_from_args(args)
    if args.format == "svg":
        _emit(emit_svg(chart), args.out)
    elif args.format == "json":
        _emit(serialize.dumps(chart), args.out)
    else:
        _emit(emit_ascii(chart), args.out)
    return 0


def cmd_readoff(args) -> int:
    chart = _chart_from_args(args, required=["h0"])
    stems = range(args.stem_min, (args.stem_max if args.stem_max is not None else args.stem_min) + 1)
    groups = [read_off_groups(chart, stem) for stem in stems]
    if args.format == "json":
        _emit(json.dumps([g.to_dict() for g in groups], indent=1), args.out)
    else:
        _emit("\n".join(f"stem {g.stem}: {g.render()}" for g in groups), args.out)
    return 0


def cmd_collapse(args) -> int:
    chart = _chart_from_args(args, required=["h0"] if args.h0_linearity else [])
    found = collapse_check(chart, args.r_max, args.h0_linearity, args.stem_max)
    if args.format == "json":
        _emit(json.dumps([d.to_dict() for d in found], indent=1), args.out)
    else:
        lines = [f"d{d.r}: (stem {d.source[0]}, s {d.source[1]}) -> (stem {d.target[0]}, s {d.target[1]})"
                 for d in found]
        lines.append(f"{len(found)} possible differentials")
        _emit("\n".join(lines), args.out)
    return 0


def cmd_lescheck(args) -> int:
    preset = get_preset(args.scenario)
    if "ses" not in preset.payload:
        raise InputError(f"scenario {args.scenario} has no short exact sequence")
    ctx = ScenarioContext(preset)
    if args.max_s is not None:
        ctx.s_max = args.max_s
    if args.max_t is not None:
        ctx.t_max = args.max_t
    sub, mid, quot = ctx.ses_modules
    i, q = ctx.ses_maps
    report = les_rank_check(i, q, ctx.resolve(sub, "sub"), ctx.resolve(mid, "mid"), ctx.resolve(quot, "quot"))
    if args.format == "json":
        print(json.dumps(report.to_dict(), indent=1))
    else:
        print(f"long exact sequence of {args.scenario}: {len(report.cells)} cells checked")
        for problem in report.problems:
            print(f"  {problem}")
    if not report.passed:
        raise ValidationError(f"long exact sequence of {args.scenario} fails: {report.problems[0]}", report)
    return 0


def cmd_scenario(args) -> int:
    if args.action == "list":
        names = preset_names() if args.all else scenario_names()
        for name in names:
            preset = get_preset(name)
            print(f"{name:20} {preset.kind:16} {preset.description}")
        return 0
    if not args.names:
        raise InputError("scenario run needs at least one preset name")
    failed = []
    for name in args.names:
        result = verify_preset(name)
        if args.format == "json":
            print(json.dumps(result.to_dict(), indent=1, default=str))
        else:
            print(f"{name}: {'passed' if result.passed else 'FAILED'}")
            for check in result.checks:
                mark = "✓" if check.passed else "✗"
                line = f"  {mark} {check.name} = {check.actual!r}"
                if not check.passed:
                    line += f" (expected {check.expected!r}; {check.provenance})"
                print(line)
            for key, value in result.notes.items():
                print(f"  {key}: {value}")
        if not result.passed:
            failed.append(name)
    if failed:
        raise ValidationError(f"{len(failed)} preset(s) failed: {', '.join(failed)}")
    return 0


# -- parser -----------------------------------------------------------------------

def _common_flags() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument('--prime', type=int, default=None,
                        help='Expected prime; a mismatch is an input error')
    common.add_argument('--max-s', type=int, default=None,
                        help=f'Largest homological degree (default: scenario window or {DEFAULT_S_MAX})')
    common.add_argument('--max-t', type=int, default=None,
                        help='Largest internal degree (default: scenario window or module truncation)')
    common.add_argument('--out', type=str, default=None,
                        help='Write output to this file instead of standard output')
    common.add_argument('--format', choices=['ascii', 'svg', 'json'], default='ascii',
                        help='Output format (default: ascii)')
    common.add_argument('--products', type=str, default=None,
                        help='Comma separated product names, e.g. h0,h1 or h0,alpha,beta')
    common.add_argument('--resume', type=str, default=None,
                        help='Saved resolution to extend instead of starting over')
    common.add_argument('--log-level', type=str, default=None,
                        help='Level for the package loggers (default: LOG_LEVEL or WARNING)')
    return common


def _module_source(parser: argparse.ArgumentParser, resolution: bool = False):
    group = parser.add_mutually_exclusive_group()
    group.add_argument('--preset', type=str, help='Module preset name')
    group.add_argument('--input', type=str, help='Module JSON document')
    group.add_argument('--scenario', type=str, help='Scenario preset whose module to use')
    if resolution:
        group.add_argument('--resolution', type=str, help='Saved resolution JSON document')


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = _Parser(prog='steenrod-lab', description='Twisted Thom modules, minimal resolutions and Adams charts')
    commands = parser.add_subparsers(dest='command', required=True, parser_class=_Parser)

    algebra = commands.add_parser('algebra', parents=[common], help='Build or describe a catalog algebra')
    algebra.add_argument('action', choices=['build', 'info'])
    algebra.add_argument('name', help='A(0), E(1), A(1), A(2), E(1)-presented or Atmf')
    algebra.set_defaults(func=cmd_algebra)

    module = commands.add_parser('module', parents=[common], help='Validate and combine modules')
    module.add_argument('action', choices=['validate', 'sum', 'tensor', 'suspend', 'cyclic'])
    module.add_argument('presets', nargs='*', help='Module presets for sum, tensor and suspend')
    _module_source(module)
    module.add_argument('--method', choices=['factorized', 'words'], default='factorized',
                        help='Validation method (default: factorized)')
    module.add_argument('--by', type=int, default=1, help='Suspension degree (default: 1)')
    module.add_argument('--algebra', type=str, default='A(1)', help='Algebra for cyclic modules')
    module.add_argument('--annihilators', nargs='+', default=[], help='Annihilator elements for cyclic modules')
    module.add_argument('--d-max', type=int, default=None, help='Truncation degree for cyclic modules')
    module.add_argument('--name', type=str, default=None, help='Name of the resulting module')
    module.set_defaults(func=cmd_module)

    twist = commands.add_parser('twist', parents=[common], help='Build a twisted Thom module')
    twist.add_argument('action', choices=['apply'])
    source = twist.add_mutually_exclusive_group(required=True)
    source.add_argument('--cohomology', type=str, help='Cohomology preset name')
    source.add_argument('--cohomology-file', type=str, help='Cohomology JSON document')
    twist.add_argument('--target', required=True, choices=['HZ', 'ku', 'ko', 'tmf2', 'tmf3'])
    twist.add_argument('--class', dest='classes', action='append', default=[],
                       help='Twist class as name=expression, e.g. b=beta; repeatable')
    twist.add_argument('--alternate', action='store_true', help='Use the alternate identification b + a^2')
    twist.add_argument('--algebra', type=str, default=None, help='Algebra to act by (default: target algebra)')
    twist.add_argument('--name', type=str, default=None, help='Name of the resulting module')
    twist.set_defaults(func=cmd_twist)

    resolve = commands.add_parser('resolve', parents=[common], help='Compute a minimal resolution')
    _module_source(resolve)
    resolve.add_argument('--audit', action='store_true', help='Check d o d, minimality and exactness')
    resolve.set_defaults(func=cmd_resolve)

    chart = commands.add_parser('chart', parents=[common], help='Draw an Ext chart')
    _module_source(chart, resolution=True)
    chart.set_defaults(func=cmd_chart)

    readoff = commands.add_parser('readoff', parents=[common], help='Read groups off h0-towers')
    _module_source(readoff, resolution=True)
    readoff.add_argument('--stem-min', type=int, default=0, help='First stem (default: 0)')
    readoff.add_argument('--stem-max', type=int, default=None, help='Last stem (default: --stem-min)')
    readoff.set_defaults(func=cmd_readoff)

    collapse = commands.add_parser('collapse', parents=[common], help='List possible Adams differentials')
    _module_source(collapse, resolution=True)
    collapse.add_argument('--r-max', type=int, default=5, help='Longest differential considered (default: 5)')
    collapse.add_argument('--h0-linearity', action='store_true', help='Prune candidates with h0-linearity')
    collapse.add_argument('--stem-max', type=int, default=None, help='Last source stem considered')
    collapse.set_defaults(func=cmd_collapse)

    lescheck = commands.add_parser('lescheck', parents=[common], help='Check the long exact sequence of an SES')
    lescheck.add_argument('scenario', help='Scenario preset with a short exact sequence')
    lescheck.set_defaults(func=cmd_lescheck)

    scenario = commands.add_parser('scenario', parents=[common], help='Run or list presets')
    scenario.add_argument('action', choices=['run', 'list'])
    scenario.add_argument('names', nargs='*', help='Preset names')
    scenario.add_argument('--all', action='store_true', help='With list: every preset, not only scenarios')
    scenario.set_defaults(func=cmd_scenario)
    return parser


def _report_error(error: SteenrodLabError) -> int:
    print(f"error: {error}", file=sys.stderr)
    trailer = {"status": "error", "kind": error.kind, "exit_code": error.exit_code}
    path = getattr(error, "path", None)
    if path:
        trailer["path"] = path
    print(json.dumps(trailer), file=sys.stderr)
    return error.exit_code


def run_command(argv: Optional[Sequence[str]] = None) -> int:
    """Parse argv, run one command and return its exit code."""
    try:
        args = build_parser().parse_args(list(argv) if argv is not None else None)
        configure_logging(args.log_level.upper() if args.log_level else None)
        return args.func(args)
    except SteenrodLabError as e:
        return _report_error(e)


def main():
    sys.exit(run_command())


if __name__ == "__main__":
    main()
