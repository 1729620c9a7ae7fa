"""Command-line front end: ``fctl {check,eval,trace,step,decompose,fuzz}``.

Exit codes: 0 success, 1 type or parse error, 2 stuck, 3 fuel exhausted,
4 property failure (or engine disagreement).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from typing import Optional

from .errors import TypingError
from .generate import GenConfig
from .harness import PROPERTIES, check_source, run_suite
from .machines import emit_machine_trace, machine_eval
from .reduction import (
    DEFAULT_FUEL, Program, Stuck, StepResult, decompose,
    enumerate_decompositions, evaluate, redex_rule, step, trace, StuckError,
)
from .surface import (
    ParseError, context_json, decomposition_json, emit_trace, parse_source,
    pretty, pretty_context, pretty_metacontext, pretty_type,
)
from .syntax import ALL_MODES, CalcMode, ModeError, alpha_eq

EXIT_OK, EXIT_ERROR, EXIT_STUCK, EXIT_FUEL, EXIT_PROPERTY = 0, 1, 2, 3, 4

_EXIT_FOR = {"normalized": EXIT_OK, "stuck": EXIT_STUCK, "fuel-exhausted": EXIT_FUEL}


@dataclass
class CliConfig:
    command: str
    path: Optional[str] = None
    mode: Optional[CalcMode] = None
    fuel: int = DEFAULT_FUEL
    json: bool = False
    engine: str = "reduction"
    all: bool = False
    steps: int = 1
    seed: int = 0
    count: int = 100
    depth: int = 8


class _Usage(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _Usage(f"{self.prog}: error: {message}")


def _mode_arg(values) -> CalcMode:
    try:
        return CalcMode.of(*values)
    except ValueError:
        raise _Usage(f"unknown mode {' '.join(values)}; "
                     "expected {abortive|delimited} {cbv|cbn}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--mode", nargs=2, metavar=("CALCULUS", "STRATEGY"),
                        help="abortive|delimited cbv|cbn (overrides the file header)")
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--fuel", type=int, default=DEFAULT_FUEL,
                        help="reduction step bound (the machine gets ten times as many transitions)")

    p = _Parser(prog="fctl", description="System F with control operators.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("check", parents=[common], help="typecheck a program")
    c.add_argument("path", help="source file, or - for stdin")

    e = sub.add_parser("eval", parents=[common], help="evaluate a program")
    e.add_argument("path")
    e.add_argument("--engine", choices=("reduction", "machine", "both"), default="reduction")

    t = sub.add_parser("trace", parents=[common], help="emit the reduction trace as JSON")
    t.add_argument("path")
    t.add_argument("--engine", choices=("reduction", "machine"), default="reduction")

    s = sub.add_parser("step", parents=[common], help="apply N reduction steps")
    s.add_argument("path")
    s.add_argument("n", nargs="?", type=int, default=1)

    d = sub.add_parser("decompose", parents=[common], help="show the decomposition")
    d.add_argument("path")
    d.add_argument("--all", action="store_true", help="enumerate every decomposition")

    f = sub.add_parser("fuzz", parents=[common], help="run the property harness")
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--count", type=int, default=100)
    f.add_argument("--depth", type=int, default=8)
    return p


def parse_args(argv) -> CliConfig:
    ns = build_parser().parse_args(argv)
    cfg = CliConfig(ns.command, getattr(ns, "path", None),
                    _mode_arg(ns.mode) if ns.mode else None, ns.fuel, ns.json)
    cfg.engine = getattr(ns, "engine", "reduction")
    cfg.all = getattr(ns, "all", False)
    cfg.steps = getattr(ns, "n", 1)
    cfg.seed = getattr(ns, "seed", 0)
    cfg.count = getattr(ns, "count", 100)
    cfg.depth = getattr(ns, "depth", 8)
    if cfg.fuel < 0 or cfg.steps < 0 or cfg.count < 0 or cfg.depth < 1:
        raise _Usage("fctl: error: numeric arguments must be non-negative (depth >= 1)")
    return cfg


def _load(cfg: CliConfig, err) -> Program:
    if cfg.path == "-":
        text, name = sys.stdin.read(), "<stdin>"
    else:
        with open(cfg.path, encoding="utf-8") as fh:
            text = fh.read()
        name = cfg.path
    try:
        mode, term = parse_source(text, cfg.mode, allow_reified=True)
    except ParseError as exc:
        where = f"{name}:{exc.line}:{exc.col}" if exc.line else name
        raise _Diagnostic(f"{where}: parse error: {exc.msg}")
    except ModeError as exc:
        raise _Diagnostic(f"{name}: mode error: {exc}")
    return Program(mode, term)


class _Diagnostic(Exception):
    pass


def _emit(out, obj) -> None:
    out.write(json.dumps(obj, indent=2, ensure_ascii=False) + "\n")


# --------------------------------------------------------------------------
# commands


def cmd_check(cfg, out, err) -> int:
    p = _load(cfg, err)
    try:
        ty = check_source(p)
    except TypingError as exc:
        if cfg.json:
            _emit(out, {"ok": False, "mode": str(p.mode), "kind": exc.kind,
                        "message": exc.message, "location": exc.location})
        else:
            err.write(f"type error: {exc}\n")
        return EXIT_ERROR
    if cfg.json:
        _emit(out, {"ok": True, "mode": str(p.mode), "type": pretty_type(ty)})
    else:
        out.write(pretty_type(ty) + "\n")
    return EXIT_OK


def _result_json(engine: str, r) -> dict:
    out = {"engine": engine, "outcome": r.outcome, "steps": r.steps}
    if r.outcome == "normalized":
        out["value"] = pretty(r.value)
    elif r.outcome == "stuck":
        out["reason"] = r.reason
        out["term"] = pretty(r.term)
    else:
        out["term"] = pretty(r.last)
    return out


def _print_result(out, err, engine: str, r, label: bool) -> None:
    prefix = f"[{engine}] " if label else ""
    if r.outcome == "normalized":
        out.write(f"{prefix}{pretty(r.value)}\n{prefix}steps: {r.steps}\n")
    elif r.outcome == "stuck":
        out.write(f"{prefix}stuck after {r.steps} steps: {r.reason}\n{prefix}{pretty(r.term)}\n")
    else:
        out.write(f"{prefix}fuel exhausted after {r.steps} steps\n{prefix}{pretty(r.last)}\n")


def cmd_eval(cfg, out, err) -> int:
    p = _load(cfg, err)
    results = []
    if cfg.engine in ("reduction", "both"):
        results.append(("reduction", evaluate(p, cfg.fuel)))
    if cfg.engine in ("machine", "both"):
        results.append(("machine", machine_eval(p, 10 * cfg.fuel)))
    agree = True
    if len(results) == 2:
        a, b = results[0][1], results[1][1]
        agree = a.outcome == b.outcome and (
            a.outcome != "normalized" or alpha_eq(a.value, b.value))
    if cfg.json:
        obj = {"mode": str(p.mode), "results": [_result_json(n, r) for n, r in results]}
        if len(results) == 2:
            obj["agree"] = agree
        _emit(out, obj)
    else:
        for name, r in results:
            _print_result(out, err, name, r, len(results) == 2)
        if not agree:
            err.write("engines disagree\n")
    if not agree:
        return EXIT_PROPERTY
    return _EXIT_FOR[results[0][1].outcome]


def cmd_trace(cfg, out, err) -> int:
    p = _load(cfg, err)
    if cfg.engine == "machine":
        r = machine_eval(p, 10 * cfg.fuel)
        out.write(emit_machine_trace(p, 10 * cfg.fuel))
        return _EXIT_FOR[r.outcome]
    tr = trace(p, cfg.fuel)
    out.write(emit_trace(tr))
    return _EXIT_FOR[tr.result().outcome]


def cmd_step(cfg, out, err) -> int:
    p = _load(cfg, err)
    records = []
    status = EXIT_OK
    for _ in range(cfg.steps):
        r = step(p)
        if isinstance(r, StepResult):
            records.append({"rule": r.rule, "program": pretty(r.after)})
            p = Program(p.mode, r.after)
        elif isinstance(r, Stuck):
            records.append({"stuck": r.reason})
            status = EXIT_STUCK
            break
        else:
            records.append({"finished": r.decomposition.kind})
            break
    if cfg.json:
        _emit(out, {"mode": str(p.mode), "steps": records, "program": pretty(p.term)})
        return status
    for i, rec in enumerate(records, 1):
        if "rule" in rec:
            out.write(f"{i}. {rec['rule']}: {rec['program']}\n")
        elif "stuck" in rec:
            out.write(f"stuck: {rec['stuck']}\n")
        else:
            out.write(f"already a {rec['finished']}\n")
    if not records:
        out.write(pretty(p.term) + "\n")
    return status


def cmd_decompose(cfg, out, err) -> int:
    p = _load(cfg, err)
    if cfg.all:
        entries = []
        for entry in enumerate_decompositions(p):
            t, E = entry[0], entry[1]
            rec = {"term": pretty(t), "context": context_json(E),
                   "rule": redex_rule(t, p.mode)}
            if p.mode.delimited:
                rec["metacontext"] = [context_json(e) for e in entry[2]]
            rec["text"] = (f"{pretty(t)} in {pretty_context(E)}"
                           + (f" under {pretty_metacontext(entry[2])}" if p.mode.delimited else ""))
            entries.append(rec)
        if cfg.json:
            _emit(out, {"mode": str(p.mode), "decompositions": entries})
        else:
            for rec in entries:
                mark = f"  redex ({rec['rule']})" if rec["rule"] else ""
                out.write(f"{rec['text']}{mark}\n")
            out.write(f"{len(entries)} decompositions, "
                      f"{sum(1 for r in entries if r['rule'])} redex\n")
        return EXIT_OK
    try:
        d = decompose(p)
    except StuckError as exc:
        if cfg.json:
            _emit(out, {"mode": str(p.mode), "stuck": exc.reason, "term": pretty(exc.term)})
        else:
            out.write(f"stuck: {exc.reason}\n  at {pretty(exc.term)}\n")
        return EXIT_STUCK
    if cfg.json:
        _emit(out, {"mode": str(p.mode), **decomposition_json(d)})
        return EXIT_OK
    out.write(f"{d.kind}: {pretty(d.term)}\n")
    if d.rule:
        out.write(f"rule: {d.rule}\n")
    out.write(f"context: {pretty_context(d.context)}\n")
    if d.meta is not None:
        out.write(f"metacontext: {pretty_metacontext(d.meta)}\n")
    return EXIT_OK


def cmd_fuzz(cfg, out, err) -> int:
    modes = [cfg.mode] if cfg.mode else list(ALL_MODES)
    reports = [run_suite(GenConfig(m, seed=cfg.seed, max_depth=cfg.depth, count=cfg.count),
                         PROPERTIES, cfg.fuel)
               for m in modes]
    if cfg.json:
        payload = [r.to_json() for r in reports]
        _emit(out, payload[0] if len(payload) == 1 else payload)
    else:
        out.write("\n".join(r.to_text() for r in reports))
    return EXIT_OK if all(r.ok for r in reports) else EXIT_PROPERTY


COMMANDS = {
    "check": cmd_check, "eval": cmd_eval, "trace": cmd_trace,
    "step": cmd_step, "decompose": cmd_decompose, "fuzz": cmd_fuzz,
}


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        cfg = parse_args(sys.argv[1:] if argv is None else argv)
        return COMMANDS[cfg.command](cfg, out, err)
    except _Usage as exc:
        err.write(f"{exc}\n")
        return EXIT_ERROR
    except _Diagnostic as exc:
        err.write(f"{exc}\n")
        return EXIT_ERROR
    except OSError as exc:
        err.write(f"fctl: {exc}\n")
        return EXIT_ERROR
    except RecursionError:
        err.write("fctl: input nested too deeply\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
