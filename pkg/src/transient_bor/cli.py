"""Command line: ``transient-bor run|validate|list-scenarios|cache``.

Exit codes: 0 success, 2 validation failure or invalid scenario, 1 any other error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .cache import ENV_VAR, ResponseCache
from .scenarios import ScenarioError, builtin_names, load_scenario

log = logging.getLogger("transient_bor")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="transient-bor",
                                description="Transient scattering from bodies of revolution.")
    p.add_argument("--cache-dir", help=f"response cache root (default: ${ENV_VAR} or ~/.cache/transient_bor)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a built-in scenario or an INI scenario file")
    run.add_argument("--scenario", required=True)
    run.add_argument("--backend", choices=("fd", "td", "both"))
    run.add_argument("--out", help="output directory (default from the scenario)")
    run.add_argument("--no-cache", action="store_true", help="solve every frequency afresh")

    val = sub.add_parser("validate", help="run a self-check suite")
    val.add_argument("--suite", choices=("mie", "properties"), required=True)

    sub.add_parser("list-scenarios", help="list built-in scenarios")

    cache = sub.add_parser("cache", help="inspect or clear the response cache")
    cache.add_argument("action", choices=("stats", "clear"))
    return p


def _cmd_run(args) -> int:
    from .runner import run_scenario

    s = load_scenario(args.scenario)
    if args.backend:
        s = s.with_backend(args.backend)
    cache = None if args.no_cache else ResponseCache(args.cache_dir)
    res = run_scenario(s, args.out, cache)
    print(f"scenario {s.name}: backend={s.solver.backend} solver_invocations={res.solver_invocations}")
    if res.crossval is not None:
        print(f"cross-validation NRMS (far field): {res.crossval['nrms_far_field']:.4f}")
    for ev in res.events:
        print(f"event t={ev.t_peak * 1e9:.3f} ns amplitude={ev.amplitude:.4g} width={ev.width * 1e9:.3f} ns")
    for key in sorted(res.files):
        print(f"wrote {res.files[key]}")
    return 0


def _cmd_validate(args) -> int:
    from .validation import SUITES

    checks = SUITES[args.suite]()
    for c in checks:
        print(c.line())
    return 0 if all(c.passed for c in checks) else 2


def _cmd_list(_args) -> int:
    for name in builtin_names():
        s = load_scenario(name)
        print(f"{name:12s} {s.title}")
    return 0


def _cmd_cache(args) -> int:
    cache = ResponseCache(args.cache_dir)
    if args.action == "stats":
        print(json.dumps(cache.stats(), indent=2, sort_keys=True))
    else:
        print(f"removed {cache.clear()} entries from {cache.root}")
    return 0


COMMANDS = {"run": _cmd_run, "validate": _cmd_validate, "list-scenarios": _cmd_list, "cache": _cmd_cache}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - report and map to exit code 1
        log.debug("failure", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
