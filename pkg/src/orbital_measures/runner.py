"""Scenario configuration, orchestration of the built-in demonstrations, and reports.

Config files are TOML restricted to a flat set of dotted keys::

    scenario = "prufer_counterexample"
    prufer.N = 8
    prufer.M = 12

    [convergence]
    epsilon = 1e-2
"""

from __future__ import annotations

import json
import math
import re
import sys
import time
from dataclasses import dataclass, field
from typing import Any, Callable

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import __version__
from .actions import audit_isometry, dyadic_rotation_action
from .averaging import (
    certify_ergodicity,
    equicontinuity_check,
    moving_basepoint_compare,
    trace,
    uniformity_diagnostic,
)
from .group_chain import DEFAULT_LEVEL_CAP, dyadic_chain
from .measures import CONVERGED, analyze_sequence, discrepancy, orbital_measure
from .prufer.pipeline import counterexample_pipeline, limit_matches_stated
from .spaces import CirclePoint, circle_test_family, encode_point

REPORT_SCHEMA = "orbital-measures-report/1"

SCENARIOS = {
    "dyadic_rotation_circle": "orbital measures of dyadic rotations on the circle: "
    "isometry audit, weak convergence, ergodicity of the limit",
    "moving_basepoint_circle": "orbital measures along basepoints x_n = x_0 + 2^-n "
    "compared with those at x_0",
    "prufer_counterexample": "translations on {0,1}^Z(2^inf): non-isometric action "
    "whose orbital measures converge to a non-ergodic limit",
}

_SCENARIO_SPACE = {
    "dyadic_rotation_circle": ("circle", "dyadic_rotation"),
    "moving_basepoint_circle": ("circle", "dyadic_rotation"),
    "prufer_counterexample": ("prufer", "prufer_translation"),
}


class ConfigError(ValueError):
    """Invalid scenario configuration; carries the offending field and line."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if field is not None:
            loc.append(f"field '{field}'")
        super().__init__(f"{', '.join(loc)}: {message}" if loc else message)
        self.field = field
        self.line = line


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _int_in(lo, hi):
    def check(v):
        if not _is_int(v):
            return "expected an integer"
        if not lo <= v <= hi:
            return f"{v} outside [{lo}, {hi}]" + (f" (exceeds bound {hi})" if v > hi else "")
    return check


def _float_in(lo, hi, *, open_lo=True):
    def check(v):
        if not _is_number(v):
            return "expected a number"
        if (v <= lo if open_lo else v < lo) or v > hi:
            return f"{v!r} outside {'(' if open_lo else '['}{lo}, {hi}]"
    return check


def _choice(*options):
    def check(v):
        if v not in options:
            return f"expected one of {', '.join(map(repr, options))}, got {v!r}"
    return check


def _basepoints(v):
    if not isinstance(v, list) or not v or not all(_is_number(t) for t in v):
        return "expected a non-empty list of numbers"
    if len(v) > 16:
        return "at most 16 basepoints"


# key -> (validator, default); None defaults are resolved per scenario
_FIELDS: dict[str, tuple[Callable[[Any], str | None], Any]] = {
    "scenario": (_choice(*SCENARIOS), None),
    "chain": (_choice("dyadic"), "dyadic"),
    "space": (_choice("circle", "prufer"), None),
    "action": (_choice("dyadic_rotation", "prufer_translation"), None),
    "seed": (_int_in(0, 2**63 - 1), 0),
    "test_family.max_frequency": (_int_in(1, 64), 4),
    "test_family.truncation_level": (_int_in(1, 8), 3),
    "test_family.max_coordinates": (_int_in(1, 4), 2),
    "convergence.epsilon": (_float_in(0.0, 1.0), None),
    "convergence.window": (_int_in(2, DEFAULT_LEVEL_CAP), 3),
    "averaging.max_level": (_int_in(2, 16), 12),
    "averaging.epsilon": (_float_in(0.0, 1.0), None),
    "averaging.window": (_int_in(2, DEFAULT_LEVEL_CAP), None),
    "audit.sample_pairs": (_int_in(0, 100_000), 64),
    "audit.tolerance": (_float_in(0.0, 1.0), 1e-12),
    "audit.seed": (_int_in(0, 2**63 - 1), None),
    "audit.max_level": (_int_in(0, DEFAULT_LEVEL_CAP), None),
    "equicontinuity.pairs": (_int_in(0, 100_000), 256),
    "prufer.N": (_int_in(1, DEFAULT_LEVEL_CAP - 2), 8),
    "prufer.M": (_int_in(1, DEFAULT_LEVEL_CAP), 12),
    "circle.basepoints": (_basepoints, [0.0]),
    "output.format": (_choice("human", "machine"), "human"),
}


_CIRCLE_ONLY = {"averaging.max_level", "circle.basepoints", "test_family.max_frequency"}
_PRUFER_ONLY = {"prufer.N", "prufer.M", "test_family.truncation_level", "test_family.max_coordinates"}


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    values: dict[str, Any]

    def __getitem__(self, key):
        return self.values[key]

    @property
    def output_format(self) -> str:
        return self.values["output.format"]

    def to_dict(self) -> dict:
        """Effective settings, without keys that do not apply to this scenario's space."""
        skip = _CIRCLE_ONLY if self.values["space"] == "prufer" else _PRUFER_ONLY
        return {k: v for k, v in sorted(self.values.items()) if k not in skip}


def _flatten(tree: dict, prefix: str = "") -> dict[str, Any]:
    out = {}
    for k, v in tree.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


_HEADER = re.compile(r"^\s*\[\s*([A-Za-z0-9_.\s]+?)\s*\]\s*(#.*)?$")
_ASSIGN = re.compile(r"^\s*([A-Za-z0-9_.\s\"]+?)\s*=")


def _key_lines(text: str) -> dict[str, int]:
    lines, section = {}, ""
    for i, raw in enumerate(text.splitlines(), start=1):
        if m := _HEADER.match(raw):
            section = m.group(1).replace(" ", "") + "."
        elif m := _ASSIGN.match(raw):
            key = m.group(1).replace(" ", "").replace('"', "")
            lines.setdefault(section + key, i)
    return lines


def parse_config(text: str, *, overrides: dict[str, Any] | None = None) -> ScenarioConfig:
    """Parse and validate a scenario file; defaults are applied, unknown keys rejected."""
    try:
        tree = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"syntax error: {exc}", line=int(m.group(1)) if m else None) from exc
    raw = _flatten(tree)
    raw.update(overrides or {})
    lines = _key_lines(text)
    for key in raw:
        if key not in _FIELDS:
            raise ConfigError("unknown key", field=key, line=lines.get(key))
    for key, value in raw.items():
        problem = _FIELDS[key][0](value)
        if problem:
            raise ConfigError(problem, field=key, line=lines.get(key))
    if "scenario" not in raw:
        raise ConfigError("missing required key", field="scenario")

    values = {k: default for k, (_, default) in _FIELDS.items()}
    values.update(raw)
    scenario = values["scenario"]
    space, action = _SCENARIO_SPACE[scenario]
    for key, expected in (("space", space), ("action", action)):
        if values[key] is None:
            values[key] = expected
        elif values[key] != expected:
            raise ConfigError(
                f"scenario {scenario!r} needs {key} = {expected!r}", field=key, line=lines.get(key)
            )
    if values["convergence.epsilon"] is None:
        values["convergence.epsilon"] = 1e-3 if space == "prufer" else 1e-6
    if values["averaging.epsilon"] is None:
        values["averaging.epsilon"] = values["convergence.epsilon"]
    if values["averaging.window"] is None:
        values["averaging.window"] = values["convergence.window"]
    if values["audit.seed"] is None:
        values["audit.seed"] = values["seed"]
    values["circle.basepoints"] = [float(t) for t in values["circle.basepoints"]]
    if isinstance(values["audit.tolerance"], int):
        values["audit.tolerance"] = float(values["audit.tolerance"])

    if space == "prufer":
        N, M = values["prufer.N"], values["prufer.M"]
        if M < N + 2:
            raise ConfigError(f"prufer.M = {M} must be >= prufer.N + 2 = {N + 2}",
                              field="prufer.M", line=lines.get("prufer.M"))
        if values["test_family.truncation_level"] > M:
            raise ConfigError("exceeds prufer.M", field="test_family.truncation_level",
                              line=lines.get("test_family.truncation_level"))
        top = N
    else:
        top = values["averaging.max_level"]
    window = max(values["convergence.window"], values["averaging.window"])
    if top - 1 < window:
        raise ConfigError(f"levels ({top}) too few for window {window}: need levels - 1 >= window")
    if values["audit.max_level"] is None:
        values["audit.max_level"] = top
    elif values["audit.max_level"] > (values["prufer.M"] if space == "prufer" else top):
        raise ConfigError("exceeds the scenario's levels", field="audit.max_level",
                          line=lines.get("audit.max_level"))
    return ScenarioConfig(scenario, values)


def load_config(path: str, **kw) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), **kw)


@dataclass
class ScenarioReport:
    config: ScenarioConfig
    status: str = "completed"  # "completed" | "failed"
    error: str | None = None
    checks: dict[str, bool] = field(default_factory=dict)
    sections: dict[str, Any] = field(default_factory=dict)
    wall_time: float = 0.0
    version: str = __version__

    @property
    def ok(self) -> bool:
        return self.status == "completed"

    def to_dict(self, *, include_wall_time: bool = True) -> dict:
        doc = {
            "schema": REPORT_SCHEMA,
            "tool_version": self.version,
            "scenario": self.config.scenario,
            "config": self.config.to_dict(),
            "status": self.status,
            "error": self.error,
            "checks": dict(self.checks),
            "sections": self.sections,
        }
        if include_wall_time:
            doc["wall_time_s"] = self.wall_time
        return doc


# -- scenarios ------------------------------------------------------------------

def _circle_setup(cfg: ScenarioConfig):
    N = cfg["averaging.max_level"]
    chain = dyadic_chain(N)
    action = dyadic_rotation_action(chain)
    family = circle_test_family(cfg["test_family.max_frequency"])
    return N, action, family


def _audit(cfg, action, report, workers):
    audit = audit_isometry(
        action,
        max_level=cfg["audit.max_level"],
        sample_pairs=cfg["audit.sample_pairs"],
        tolerance=cfg["audit.tolerance"],
        seed=cfg["audit.seed"],
        workers=workers,
    )
    report.sections["audit"] = audit.to_dict(encode_point)
    report.checks["audit_pass"] = audit.passed
    return audit


def _run_dyadic_rotation(cfg, report, workers):
    N, action, family = _circle_setup(cfg)
    eps, win = cfg["convergence.epsilon"], cfg["convergence.window"]
    a_eps, a_win = cfg["averaging.epsilon"], cfg["averaging.window"]
    audit = _audit(cfg, action, report, workers)

    basepoints = [CirclePoint(t) for t in cfg["circle.basepoints"]]
    convergence = []
    for x in basepoints:
        seq = [orbital_measure(action, n, x) for n in range(1, N + 1)]
        convergence.append(analyze_sequence(seq, family, eps, win, workers=workers))
    report.sections["convergence"] = [
        {"basepoint": encode_point(x), **c.to_dict(encode_point)}
        for x, c in zip(basepoints, convergence)
    ]
    report.checks["converged"] = all(c.verdict == CONVERGED for c in convergence)

    x0 = basepoints[0]
    traces = [trace(action, f, x0, N, a_eps, a_win) for f in family]
    report.sections["traces"] = [t.to_dict(encode_point) for t in traces]

    sample_level = min(4, N)
    sample = orbital_measure(action, sample_level, x0).points
    uniformity = []
    for f in family:
        ts = [trace(action, f, y, N, a_eps, a_win) for y in sample]
        if all(t.converged for t in ts):
            uniformity.append(uniformity_diagnostic(ts, a_eps).to_dict())
    report.sections["uniformity"] = {"sample_level": sample_level, "reports": uniformity}
    report.checks["uniform_limits_agree"] = all(not u["limits_disagree"] for u in uniformity)

    pairs = cfg["equicontinuity.pairs"]
    if pairs:
        eq = equicontinuity_check(action, list(family), N, pairs, cfg["seed"], audit=audit,
                                  diagnostic=not audit.passed)
        report.sections["equicontinuity"] = [r.to_dict() for r in eq]
        report.checks["equicontinuous"] = all(r.holds for r in eq)

    limit = convergence[0].limit_representative
    if limit is not None:
        verdict = certify_ergodicity(limit, family, action, N - 1, a_eps, a_win, workers=workers)
        report.sections["ergodicity"] = verdict.to_dict(encode_point)
        report.checks["ergodic_consistent"] = verdict.verdict == "ERGODIC_CONSISTENT"


def _run_moving_basepoint(cfg, report, workers):
    N, action, family = _circle_setup(cfg)
    eps, win = cfg["convergence.epsilon"], cfg["convergence.window"]
    a_eps, a_win = cfg["averaging.epsilon"], cfg["averaging.window"]
    audit = _audit(cfg, action, report, workers)

    x0 = CirclePoint(cfg["circle.basepoints"][0])
    moving = [CirclePoint(x0.t + 2.0 ** -n) for n in range(1, N + 1)]
    comparisons = [
        moving_basepoint_compare(action, f, moving, x0, epsilon=a_eps, window=a_win,
                                 audit=audit, diagnostic=not audit.passed)
        for f in family
    ]
    report.sections["moving_basepoint"] = {
        "x0": encode_point(x0),
        "basepoints": [encode_point(x) for x in moving],
        "comparisons": [c.to_dict() for c in comparisons],
    }
    report.checks["gaps_within_bounds"] = all(c.gaps_within_bounds for c in comparisons)
    report.checks["shared_limit"] = all(c.shared_limit for c in comparisons)

    seq_moving = [orbital_measure(action, n, x) for n, x in enumerate(moving, start=1)]
    seq_fixed = [orbital_measure(action, n, x0) for n in range(1, N + 1)]
    conv_moving = analyze_sequence(seq_moving, family, eps, win, workers=workers)
    conv_fixed = analyze_sequence(seq_fixed, family, eps, win, workers=workers)
    report.sections["convergence"] = [
        {"sequence": "moving", **conv_moving.to_dict(encode_point)},
        {"sequence": "fixed", **conv_fixed.to_dict(encode_point)},
    ]
    both = conv_moving.verdict == conv_fixed.verdict == CONVERGED
    report.checks["converged"] = both
    if both:
        gap = discrepancy(conv_moving.limit_representative, conv_fixed.limit_representative, family)
        report.sections["limit_discrepancy"] = gap
        report.checks["same_limit"] = gap <= eps


def _run_prufer(cfg, report, workers):
    result = counterexample_pipeline(
        cfg["prufer.N"],
        cfg["prufer.M"],
        truncation_level=cfg["test_family.truncation_level"],
        max_coordinates=cfg["test_family.max_coordinates"],
        epsilon=cfg["convergence.epsilon"],
        window=cfg["convergence.window"],
        audit_sample_pairs=cfg["audit.sample_pairs"],
        audit_tolerance=cfg["audit.tolerance"],
        seed=cfg["audit.seed"],
        equicontinuity_pairs=min(cfg["equicontinuity.pairs"], 64),
        workers=workers,
    )
    report.sections.update(result.to_dict())
    report.checks["audit_pass"] = result.audit.passed
    report.checks["two_point_orbits"] = all(o.holds and o.both_attained for o in result.orbits)
    report.checks["converged"] = result.convergence.verdict == CONVERGED
    report.checks["limit_matches_stated"] = limit_matches_stated(result)
    report.checks["non_ergodic"] = (
        result.ergodicity is not None and result.ergodicity.verdict == "NON_ERGODIC"
    )


_RUNNERS = {
    "dyadic_rotation_circle": _run_dyadic_rotation,
    "moving_basepoint_circle": _run_moving_basepoint,
    "prufer_counterexample": _run_prufer,
}


def run_scenario(config: ScenarioConfig, *, workers: int = 1) -> ScenarioReport:
    """Run a built-in scenario. Component failures are recorded, not raised."""
    if workers < 1:
        raise ValueError("workers must be >= 1")
    report = ScenarioReport(config)
    start = time.perf_counter()
    try:
        _RUNNERS[config.scenario](config, report, workers)
    except Exception as exc:  # report what completed before the failure
        report.status = "failed"
        report.error = f"{type(exc).__name__}: {exc}"
    report.wall_time = time.perf_counter() - start
    return report


# -- emission -------------------------------------------------------------------

def emit_machine(report: ScenarioReport, *, include_wall_time: bool = True) -> str:
    return json.dumps(report.to_dict(include_wall_time=include_wall_time),
                      indent=2, sort_keys=True, allow_nan=False) + "\n"


def parse_report(text: str) -> dict:
    doc = json.loads(text)
    if doc.get("schema") != REPORT_SCHEMA:
        raise ValueError(f"unsupported report schema {doc.get('schema')!r}")
    return doc


def _fmt(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _table(headers: list[str], rows: list[list]) -> list[str]:
    cells = [[_fmt(c) for c in row] for row in rows]
    widths = [max(len(h), *(len(r[i]) for r in cells)) if cells else len(h)
              for i, h in enumerate(headers)]
    out = ["  ".join(h.rjust(w) for h, w in zip(headers, widths)),
           "  ".join("-" * w for w in widths)]
    out += ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    return out


def _point_label(p: dict) -> str:
    if "circle" in p:
        return f"t={p['circle']:.12g}"
    q = p["prufer"]
    size = 1 << q["truncation_level"]
    return f"config[M={q['truncation_level']}, ones={q['ones']}/{size}, hex={q['bits_hex'][:8]}...]"


def _human_convergence(conv: dict, lines: list[str], max_cols: int = 5):
    labels = conv["labels"][:max_cols]
    lines.append(f"verdict: {conv['verdict']}  (epsilon={_fmt(conv['epsilon'])}, "
                 f"window={conv['window']}, family={conv['family']})")
    rows = [[n, d, *row[:max_cols]]
            for n, (d, row) in enumerate(zip(conv["tail_discrepancies"], conv["integrals"]), start=1)]
    lines += _table(["n", "D_F(mu_n, mu_N)", *[f"int {l}" for l in labels]], rows)
    atoms = conv["limit_representative"]
    if atoms:
        lines.append(f"limit representative ({len(atoms)} atoms):")
        lines += _table(["atom", "weight"], [[_point_label(a["point"]), a["weight"]] for a in atoms[:16]])
        if len(atoms) > 16:
            lines.append(f"... {len(atoms) - 16} more atoms")


def emit_human(report: ScenarioReport) -> str:
    doc = report.to_dict()
    s = doc["sections"]
    lines = [f"scenario: {doc['scenario']}   tool {doc['tool_version']}   schema {doc['schema']}",
             f"status: {doc['status']}" + (f"   error: {doc['error']}" if doc["error"] else ""),
             f"wall time: {doc['wall_time_s']:.3f} s", ""]
    lines.append("[config]")
    lines += _table(["key", "value"], [[k, v] for k, v in doc["config"].items()])
    lines += ["", "[checks]"]
    lines += _table(["check", "holds"], [[k, v] for k, v in doc["checks"].items()])
    if "audit" in s:
        a = s["audit"]
        lines += ["", "[isometry audit]",
                  f"verdict: {a['verdict']}  tolerance={_fmt(a['tolerance'])}  levels<={a['max_level']}  "
                  f"checked={a['samples_checked']}"]
        if a["witness"]:
            w = a["witness"]
            lines.append(f"witness: g=(level {w['g']['level']}, code {w['g']['code']})  "
                         f"d(y,z)={_fmt(w['distance_before'])}  d(gy,gz)={_fmt(w['distance_after'])}")
    if "distances" in s:
        lines += ["", "[d(x_n, 1-bar)]"]
        lines += _table(["n", "d(x_n,1)", "d(1-x_n,0)", "2^-n - 2^-(M+1)"],
                        [[r["n"], r["d_xn_one"], r["d_complement_zero"], r["expected"]]
                         for r in s["distances"]])
    if "orbital_measures" in s:
        lines += ["", "[orbital measures mu_n^{x_n}]"]
        lines += _table(["n", "atom", "weight"],
                        [[m["n"], _point_label(a["point"]), a["weight"]]
                         for m in s["orbital_measures"] for a in m["atoms"]])
    conv = s.get("convergence")
    if conv:
        for c in conv if isinstance(conv, list) else [conv]:
            head = c.get("sequence") or (c.get("basepoint") and _point_label(c["basepoint"])) or ""
            lines += ["", f"[weak convergence {head}]".replace(" ]", "]")]
            _human_convergence(c, lines)
    if "traces" in s:
        lines += ["", "[traces A_n f(x_0)]"]
        tr = s["traces"][:6]
        n_max = max(len(t["values"]) for t in tr)
        rows = [[n + 1, *[t["values"][n] for t in tr]] for n in range(n_max)]
        lines += _table(["n", *[t["label"] for t in tr]], rows)
        lines.append("verdicts: " + ", ".join(f"{t['label']}={t['verdict']}" for t in s["traces"]))
    if "moving_basepoint" in s:
        lines += ["", "[moving basepoints]"]
        for c in s["moving_basepoint"]["comparisons"][:3]:
            lines.append(f"{c['label']}: within bounds={_fmt(c['gaps_within_bounds'])}  "
                         f"shared limit={_fmt(c['shared_limit'])}")
            lines += _table(["n", "d(x_n,x_0)", "gap", "bound"],
                            [[n, d, g, b] for n, (d, g, b) in
                             enumerate(zip(c["distances"], c["gaps"], c["bounds"]), start=1)])
    if s.get("equicontinuity"):
        eq = s["equicontinuity"]
        eq = eq if isinstance(eq, list) else [eq]
        lines += ["", "[equicontinuity]"]
        lines += _table(["f", "Lip", "pairs", "max ratio", "violations", "mode"],
                        [[e["label"], e["lipschitz_bound"], e["pairs_checked"], e["max_ratio"],
                          e["violations"], e["mode"]] for e in eq])
    for key, title in (("ergodicity", "ergodicity of limit"),
                       ("stated_limit_ergodicity", "ergodicity of (delta_0 + delta_1)/2")):
        e = s.get(key)
        if e:
            lines += ["", f"[{title}]", f"verdict: {e['verdict']}  "
                      f"({e['traces_converged']}/{e['traces_total']} traces converged, "
                      f"levels<={e['parameters']['trace_levels']})"]
            if e["witnesses"]:
                w = e["witnesses"][0]
                lines.append(f"witness {w['label']}: limits {w['limits']} vs integral "
                             f"{_fmt(w['expected_integral'])}")
    return "\n".join(lines) + "\n"


def emit_report(report: ScenarioReport, format: str = "human") -> str:
    if format == "machine":
        return emit_machine(report)
    if format == "human":
        return emit_human(report)
    raise ValueError(f"unknown format {format!r}")
