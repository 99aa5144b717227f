"""Command-line front end.

Usage::

    ruin-lab CONFIG.json [--seed N] [--paths N] [--chunks N] [--out PATH] [--format csv|json]
    ruin-lab CONFIG.json --emit-config

The JSON config names the command and the model. Exit status is 0 on
success, 2 when the config or the model is invalid, 3 when a computation
fails or a verification check does not hold. Errors are reported on stderr
as a single JSON object.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import jsonschema
import numpy as np

from .andersen_ruin import (
    AndersenModel,
    epsilon_sweep_andersen,
    ladder_sample,
    pk_andersen_survival,
    spitzer_estimate,
)
from .classical_ruin import ClassicalModel, epsilon_sweep_classical, pk_psi0, pk_survival
from .discrete_ruin import (
    SeasonalModel,
    dp_ruin_curve,
    epsilon_sweep_discrete,
    seasonal_survival,
    survival_pgf_coefficients,
    to_strict,
)
from .dist_core import IntegerPMF, choose_site, claim_from_json, perturb_continuous, perturb_discrete
from .errors import ConfigError, ModelError, NumericalError, RuinLabError
from .mc_engine import MCConfig, ruin_curve, simulate_coupled, simulate_sup

log = logging.getLogger("ruin_lab")

COMMANDS = (
    "compute-discrete",
    "compute-classical",
    "compute-andersen",
    "sweep-epsilon",
    "simulate",
    "verify",
)

EXIT_OK, EXIT_MODEL, EXIT_NUMERICAL = 0, 2, 3

_POS = {"type": "number", "exclusiveMinimum": 0}
_CLAIM = {
    "type": "object",
    "required": ["family"],
    "properties": {"family": {"type": "string"}, "params": {"type": "object"}},
}
_PMF = {
    "type": "object",
    "required": ["probs"],
    "properties": {
        "probs": {
            "type": "object",
            "minProperties": 1,
            "propertyNames": {"pattern": "^[0-9]+$"},
            "additionalProperties": {"type": "number", "minimum": 0, "maximum": 1},
        }
    },
    "additionalProperties": False,
}
_MODEL = {
    "oneOf": [
        {"type": "string"},
        {
            "type": "object",
            "required": ["type"],
            "properties": {"type": {"enum": ["discrete", "classical", "andersen"]}},
            "allOf": [
                {
                    "if": {"properties": {"type": {"const": "discrete"}}},
                    "then": {
                        "required": ["c", "pmfs"],
                        "properties": {
                            "type": {},
                            "c": {"type": "integer", "minimum": 1},
                            "pmfs": {"type": "array", "minItems": 1, "items": _PMF},
                        },
                        "additionalProperties": False,
                    },
                },
                {
                    "if": {"properties": {"type": {"const": "classical"}}},
                    "then": {
                        "required": ["lambda", "c", "claim"],
                        "properties": {"type": {}, "lambda": _POS, "c": _POS, "claim": _CLAIM},
                        "additionalProperties": False,
                    },
                },
                {
                    "if": {"properties": {"type": {"const": "andersen"}}},
                    "then": {
                        "required": ["c", "claim", "interarrival"],
                        "properties": {"type": {}, "c": _POS, "claim": _CLAIM, "interarrival": _CLAIM},
                        "additionalProperties": False,
                    },
                },
            ],
        },
    ]
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["command", "model"],
    "properties": {
        "command": {"type": "string"},
        "model": _MODEL,
        "u_max": {"type": "number", "minimum": 0},
        "u": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
        "convention": {"enum": ["weak", "strict"]},
        "tolerance": _POS,
        "grid_step": _POS,
        "epsilons": {"type": "array", "items": _POS, "minItems": 1},
        "a": _POS,
        "site": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 2, "maxItems": 2},
        "method": {"enum": ["mc", "dp"]},
        "spitzer_n": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
        "mc": {
            "type": "object",
            "properties": {
                "paths": {"type": "integer", "minimum": 1},
                "horizon": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
                "chunks": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
        "output": {
            "type": "object",
            "properties": {"format": {"enum": ["csv", "json"]}, "path": {"type": ["string", "null"]}},
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}

_VALIDATOR = jsonschema.Draft202012Validator(SCHEMA)


@dataclass(frozen=True)
class RunConfig:
    command: str
    model: Dict[str, Any]
    u_max: float = 10
    u: tuple = (0.0,)
    convention: str = "weak"
    tolerance: float = 1e-8
    grid_step: Optional[float] = None
    epsilons: tuple = ()
    a: Optional[float] = None
    site: Optional[tuple] = None
    method: str = "dp"
    spitzer_n: tuple = (1, 10, 100, 1000)
    mc: MCConfig = field(default_factory=lambda: MCConfig(paths=10_000, horizon=1_000))
    output_format: str = "csv"
    output_path: Optional[str] = None

    def to_json(self) -> dict:
        out = {
            "command": self.command,
            "model": self.model,
            "u_max": self.u_max,
            "u": list(self.u),
            "convention": self.convention,
            "tolerance": self.tolerance,
            "method": self.method,
            "spitzer_n": list(self.spitzer_n),
            "mc": dataclasses.asdict(self.mc),
            "output": {"format": self.output_format, "path": self.output_path},
        }
        if self.grid_step is not None:
            out["grid_step"] = self.grid_step
        if self.epsilons:
            out["epsilons"] = list(self.epsilons)
        if self.a is not None:
            out["a"] = self.a
        if self.site is not None:
            out["site"] = list(self.site)
        return out


def emit_config(config: RunConfig) -> str:
    """Serialise a config so that ``parse_config`` returns an equal object."""
    return json.dumps(config.to_json(), indent=2) + "\n"


def _pointer(path) -> str:
    return "".join("/" + str(p).replace("~", "~0").replace("/", "~1") for p in path)


def parse_config(text: str, base_dir: Optional[str] = None) -> RunConfig:
    """Validate JSON config text and build a :class:`RunConfig`.

    Errors raise :class:`ConfigError` whose ``pointer`` is the JSON pointer of
    the offending field. A ``model`` given as a string is read as a path,
    relative to ``base_dir`` when that is set.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    cmd = doc.get("command")
    if isinstance(cmd, str) and cmd not in COMMANDS:
        raise ConfigError(f"unknown command {cmd!r}; valid commands: {', '.join(COMMANDS)}", "/command")
    errors = sorted(_VALIDATOR.iter_errors(doc), key=lambda e: (-len(e.absolute_path), list(map(str, e.absolute_path))))
    if errors:
        err = _deepest(errors[0])
        raise ConfigError(err.message, _pointer(err.absolute_path))

    model = doc["model"]
    if isinstance(model, str):
        path = model if base_dir is None or os.path.isabs(model) else os.path.join(base_dir, model)
        if not os.path.exists(path):
            raise ConfigError(f"model file {model!r} does not exist", "/model")
        with open(path, encoding="utf-8") as fh:
            model = json.load(fh)
        sub = {"command": doc["command"], "model": model}
        errs = list(_VALIDATOR.iter_errors(sub))
        if errs:
            err = _deepest(errs[0])
            raise ConfigError(f"in {path}: {err.message}", _pointer(err.absolute_path))
    build_model(model)  # semantic checks (PMF sums, claim parameters)

    mc = doc.get("mc", {})
    out = doc.get("output", {})
    return RunConfig(
        command=doc["command"],
        model=model,
        u_max=doc.get("u_max", 10),
        u=tuple(float(x) for x in doc.get("u", [0.0])),
        convention=doc.get("convention", "weak"),
        tolerance=float(doc.get("tolerance", 1e-8)),
        grid_step=doc.get("grid_step"),
        epsilons=tuple(float(e) for e in doc.get("epsilons", ())),
        a=doc.get("a"),
        site=tuple(doc["site"]) if "site" in doc else None,
        method=doc.get("method", "dp"),
        spitzer_n=tuple(int(n) for n in doc.get("spitzer_n", (1, 10, 100, 1000))),
        mc=MCConfig(
            paths=mc.get("paths", 10_000),
            horizon=mc.get("horizon", 1_000),
            seed=mc.get("seed", 0),
            chunks=mc.get("chunks", 1),
        ),
        output_format=out.get("format", "csv"),
        output_path=out.get("path"),
    )


def _deepest(err):
    """Descend into ``oneOf``/``allOf`` sub-errors to the most specific one."""
    while err.context:
        err = max(err.context, key=lambda e: len(e.absolute_path))
    return err


def build_model(desc: dict):
    kind = desc["type"]
    try:
        if kind == "discrete":
            pmfs = []
            for i, p in enumerate(desc["pmfs"]):
                try:
                    pmfs.append(IntegerPMF.from_dict(p["probs"]))
                except ModelError as exc:
                    raise ConfigError(str(exc), f"/model/pmfs/{i}/probs") from None
            return SeasonalModel(desc["c"], tuple(pmfs))
        if kind == "classical":
            return ClassicalModel(float(desc["lambda"]), float(desc["c"]), claim_from_json(desc["claim"]))
        return AndersenModel(float(desc["c"]), claim_from_json(desc["claim"]), claim_from_json(desc["interarrival"]))
    except ConfigError:
        raise
    except ModelError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(str(exc), "/model") from None


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


@dataclass
class Artifact:
    """One output: a table (CSV) plus the JSON document mirroring it."""

    name: str
    header: List[str]
    rows: List[list]
    doc: dict


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def render_csv(art: Artifact) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(art.header)
    for row in art.rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def render_json(arts: List[Artifact]) -> str:
    doc = arts[0].doc if len(arts) == 1 else {a.name: a.doc for a in arts}
    return json.dumps(_jsonable(doc), indent=2) + "\n"


def write_outputs(arts: List[Artifact], config: RunConfig, stdout) -> List[str]:
    """Write CSV tables (one file per artifact) or a single JSON document."""
    written = []
    path = config.output_path
    if config.output_format == "json":
        text = render_json(arts)
        if path:
            _write(path, text)
            written.append(path)
        else:
            stdout.write(text)
        return written
    for i, art in enumerate(arts):
        text = render_csv(art)
        if path:
            p = path if i == 0 else _side_path(path, art.name)
            _write(p, text)
            written.append(p)
        else:
            if len(arts) > 1:
                stdout.write(f"# {art.name}\n")
            stdout.write(text)
    return written


def _side_path(path: str, name: str) -> str:
    stem, ext = os.path.splitext(path)
    return f"{stem}.{name}{ext or '.csv'}"


def _write(path: str, text: str):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _require(model, cls, command):
    if not isinstance(model, cls):
        raise ConfigError(f"{command} needs a {cls.__name__}-type model", "/model/type")
    return model


def _functional_residual(pmf: IntegerPMF, c: int, phi: np.ndarray) -> float:
    """max |phi(u) - sum_k h_k phi(u + c - k)| over the rows where it can be checked."""
    worst = 0.0
    h = pmf.probs
    for u in range(max(0, phi.size - c)):
        acc = 0.0
        for k, hk in enumerate(h):
            j = u + c - k
            if j >= 0:
                acc += hk * phi[j]
        worst = max(worst, abs(phi[u] - acc))
    return worst


def cmd_compute_discrete(cfg: RunConfig) -> List[Artifact]:
    model = _require(build_model(cfg.model), SeasonalModel, cfg.command)
    u_max = int(cfg.u_max)
    if model.N == 1:
        pmf = model.pmfs[0]
        table = survival_pgf_coefficients(pmf, model.c, u_max)
        residual = _functional_residual(pmf, model.c, table.phi)
        if cfg.convention == "strict":
            table = to_strict(table, pmf, model.c)
            table.phi = table.phi[: u_max + 1]
            table.u = table.u[: u_max + 1]
        roots = table.meta["roots"]
        residuals = {"roots": table.meta["root_residual"], "functional_equation": residual}
    else:
        if cfg.convention != "weak":
            raise ConfigError("the strict convention is only available for N = 1", "/convention")
        table = seasonal_survival(model, u_max, method=cfg.method, config=cfg.mc)
        roots = []
        residuals = {"block": table.meta.get("block")}
    rows = [[int(u), p, 1.0 - p] for u, p in zip(table.u, table.phi)]
    doc = {
        "model": cfg.model,
        "convention": cfg.convention,
        "u": [int(u) for u in table.u],
        "phi": table.phi,
        "psi": table.psi,
        "roots": [{"re": r["re"], "im": r["im"]} for r in roots],
        "residuals": residuals,
    }
    return [Artifact("phi", ["u", "phi", "psi"], rows, doc)]


def _continuous_rows(table):
    return [[u, p, lo, hi, 1.0 - p] for u, p, lo, hi in zip(table.u, table.phi, table.phi_lower, table.phi_upper)]


def _continuous_doc(cfg, table):
    return {
        "model": cfg.model,
        "u": table.u,
        "phi": table.phi,
        "phi_lower": table.phi_lower,
        "phi_upper": table.phi_upper,
        "psi": table.psi,
        "meta": table.meta,
    }


_CONT_HEADER = ["u", "phi", "phi_lower", "phi_upper", "psi"]


def cmd_compute_classical(cfg: RunConfig) -> List[Artifact]:
    model = _require(build_model(cfg.model), ClassicalModel, cfg.command)
    table = pk_survival(model, float(cfg.u_max), cfg.tolerance, cfg.grid_step)
    return [Artifact("phi", _CONT_HEADER, _continuous_rows(table), _continuous_doc(cfg, table))]


def cmd_compute_andersen(cfg: RunConfig) -> List[Artifact]:
    model = _require(build_model(cfg.model), AndersenModel, cfg.command)
    mc = cfg.mc
    n_list = sorted(set(cfg.spitzer_n) | {mc.horizon})
    sp = spitzer_estimate(model, n_list, mc.paths, mc.seed, mc.chunks)
    lad = ladder_sample(model, mc.paths, mc.horizon, mc.seed, mc.chunks, spitzer=sp)
    table = pk_andersen_survival(model, lad, sp, float(cfg.u_max), cfg.tolerance, cfg.grid_step)
    counts, edges = lad.histogram()
    phi = Artifact("phi", _CONT_HEADER, _continuous_rows(table), _continuous_doc(cfg, table))
    spitzer = Artifact(
        "spitzer",
        ["n", "p_hat", "stderr", "A_n", "psi0_lower"],
        [list(r) for r in sp.rows()],
        {"rows": [dict(zip(["n", "p_hat", "stderr", "A_n", "psi0_lower"], r)) for r in sp.rows()],
         "A_stderr": sp.A_stderr, "paths": sp.paths, "seed": sp.seed},
    )
    ladder = Artifact(
        "ladder",
        ["bin_lo", "bin_hi", "count"],
        [[lo, hi, int(k)] for lo, hi, k in zip(edges[:-1], edges[1:], counts)],
        {"censored": lad.censored, "horizon": lad.horizon, "paths": lad.paths,
         "f_plus_inf": lad.f_plus_inf, "raw_fraction": lad.raw_fraction,
         "edges": edges, "counts": counts},
    )
    return [phi, spitzer, ladder]


def _default_a(claim) -> float:
    return float(claim.ppf(0.5))


def cmd_sweep_epsilon(cfg: RunConfig) -> List[Artifact]:
    if not cfg.epsilons:
        raise ConfigError("sweep-epsilon needs a non-empty list", "/epsilons")
    model = build_model(cfg.model)
    if isinstance(model, SeasonalModel):
        if model.N != 1:
            raise ConfigError("discrete sweeps need N = 1", "/model/pmfs")
        rows_in = epsilon_sweep_discrete(model.pmfs[0], model.c, cfg.epsilons, int(cfg.u_max), cfg.site)
        rows = [[r.epsilon, r.h0_star, u, p, 1.0 - p] for r in rows_in for u, p in enumerate(r.phi)]
        header = ["epsilon", "h0_star", "u", "phi", "psi"]
    elif isinstance(model, ClassicalModel):
        a = cfg.a if cfg.a is not None else _default_a(model.claim)
        rows_in = epsilon_sweep_classical(model, cfg.epsilons, a, cfg.u, cfg.tolerance, cfg.grid_step)
        rows = [[r.epsilon, r.psi0, u, p, lo, hi, 1.0 - p]
                for r in rows_in for u, p, lo, hi in zip(r.u, r.phi, r.phi_lower, r.phi_upper)]
        header = ["epsilon", "psi0", "u", "phi", "phi_lower", "phi_upper", "psi"]
    else:
        a = cfg.a if cfg.a is not None else _default_a(model.claim)
        mc = cfg.mc
        rows_in = epsilon_sweep_andersen(model, cfg.epsilons, a, cfg.u, mc.paths, mc.horizon, mc.seed, mc.chunks)
        rows = [[r.epsilon, r.A, r.A_stderr, r.psi0_lower, u, p, 1.0 - p]
                for r in rows_in for u, p in zip(r.u, r.phi)]
        header = ["epsilon", "A", "A_stderr", "psi0_lower", "u", "phi", "psi"]
    doc = {"model": cfg.model, "columns": header, "rows": rows}
    return [Artifact("sweep", header, rows, doc)]


def cmd_simulate(cfg: RunConfig) -> List[Artifact]:
    model = build_model(cfg.model)
    ests = simulate_sup(model, list(cfg.u), cfg.mc, cfg.convention)
    header = ["u", "p_hat", "stderr", "ci95_lo", "ci95_hi", "paths", "horizon", "seed"]
    rows = [[u, e.p_hat, e.stderr, e.ci95[0], e.ci95[1], e.n, cfg.mc.horizon, cfg.mc.seed] for u, e in zip(cfg.u, ests)]
    doc = {"model": cfg.model, "estimates": [dict(e.to_json(cfg.mc), u=u) for u, e in zip(cfg.u, ests)]}
    return [Artifact("simulate", header, rows, doc)]


def _horizon_grid(horizon: int) -> List[int]:
    grid = [t for t in (1, 10, 100, 1000, 10_000, 100_000) if t < horizon]
    return grid + [horizon]


def cmd_verify(cfg: RunConfig) -> List[Artifact]:
    """Neutral-model checks: ruin trend in T, coupling dominance, epsilon sweep."""
    model = build_model(cfg.model)
    mc = cfg.mc
    checks = []
    T = _horizon_grid(mc.horizon)
    eps = cfg.epsilons or (0.1, 0.01, 0.001)

    if isinstance(model, SeasonalModel):
        curve = dp_ruin_curve(model, 0, mc.horizon, cfg.convention)
        psi_T = [float(curve[t - 1]) for t in T]
        checks.append(("ruin_trend", bool(np.all(np.diff(curve) >= -1e-15)),
                       f"psi(0,T) at T={T}: {psi_T}"))
        pmf = model.pmfs[0]
        b, s = cfg.site or choose_site(pmf, model.c)
        coupling = perturb_discrete(pmf, b, s, min(eps[0], 0.5 * (b - s) * pmf.prob(b)))
        coupled = model.coupled(coupling, 0)
        rep = simulate_coupled(coupled, 0, mc, T, cfg.convention, raise_on_violation=False)
        checks.append(("coupling", rep.violations == 0 and rep.ordering_holds,
                       f"violations={rep.violations} psi*={[e.p_hat for e in rep.star]} psi={[e.p_hat for e in rep.base]}"))
        if model.N == 1:
            rows = epsilon_sweep_discrete(pmf, model.c, sorted(eps, reverse=True), 0, (b, s))
            phi0 = [float(r.phi[0]) for r in rows]
            checks.append(("epsilon_sweep", bool(np.all(np.diff(phi0) < 0)),
                           f"phi*(0) for eps={sorted(eps, reverse=True)}: {phi0}"))
    elif isinstance(model, ClassicalModel):
        est = ruin_curve(model, 0.0, mc, T)
        p = [e.p_hat for e in est]
        checks.append(("ruin_trend", bool(np.all(np.diff(p) >= 0)), f"psi(0,T) at T={T}: {p}"))
        a = cfg.a if cfg.a is not None else _default_a(model.claim)
        star = model.with_claim(perturb_continuous(model.claim, a, min(eps[0], 0.5 * a)))
        rep = simulate_coupled(star, 0.0, mc, T, raise_on_violation=False)
        checks.append(("coupling", rep.violations == 0 and rep.ordering_holds,
                       f"violations={rep.violations} psi*={[e.p_hat for e in rep.star]} psi={[e.p_hat for e in rep.base]}"))
        ordered = sorted(e for e in eps if e < a)
        psi0 = [pk_psi0(model.with_claim(perturb_continuous(model.claim, a, e))) for e in ordered]
        checks.append(("epsilon_sweep", bool(np.all(np.diff(psi0) < 0)), f"psi*(0) for eps={ordered}: {psi0}"))
    else:
        sp = spitzer_estimate(model, T, mc.paths, mc.seed, mc.chunks)
        checks.append(("spitzer_monotone", bool(np.all(np.diff(sp.a_all) >= 0)),
                       f"A_n at n={list(sp.n_list)}: {list(sp.A)}"))
        a = cfg.a if cfg.a is not None else _default_a(model.claim)
        star = model.with_claim(perturb_continuous(model.claim, a, min(eps[0], 0.5 * a)))
        rep = simulate_coupled(star, 0.0, mc, T, raise_on_violation=False)
        checks.append(("coupling", rep.violations == 0 and rep.ordering_holds,
                       f"violations={rep.violations} psi*={[e.p_hat for e in rep.star]} psi={[e.p_hat for e in rep.base]}"))
        checks.append(("psi0_lower_rises", bool(np.all(np.diff(sp.psi0_lower) >= 0)),
                       f"psi0_lower: {list(sp.psi0_lower)}"))
    rows = [[name, "PASS" if ok else "FAIL", detail] for name, ok, detail in checks]
    doc = {"model": cfg.model, "checks": [{"check": r[0], "status": r[1], "detail": r[2]} for r in rows],
           "passed": all(ok for _, ok, _ in checks)}
    return [Artifact("verify", ["check", "status", "detail"], rows, doc)]


DISPATCH = {
    "compute-discrete": cmd_compute_discrete,
    "compute-classical": cmd_compute_classical,
    "compute-andersen": cmd_compute_andersen,
    "sweep-epsilon": cmd_sweep_epsilon,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
}


def run(config: RunConfig, stdout=None, stderr=None) -> int:
    """Execute ``config``; returns the process exit status."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        arts = DISPATCH[config.command](config)
        write_outputs(arts, config, stdout)
    except RuinLabError as exc:
        return _report(exc, stderr)
    if config.command == "verify":
        for name, status, _ in arts[0].rows:
            stderr.write(f"{status} {name}\n")
        if not arts[0].doc["passed"]:
            return EXIT_NUMERICAL
    return EXIT_OK


def _report(exc: Exception, stderr) -> int:
    code = EXIT_MODEL if isinstance(exc, ModelError) else EXIT_NUMERICAL
    rec = {"error": type(exc).__name__, "exit_code": code, "message": str(exc)}
    if isinstance(exc, ConfigError):
        rec["pointer"] = exc.pointer
        rec["message"] = exc.detail
    stderr.write(json.dumps(rec) + "\n")
    return code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ruin-lab", description="Ruin and survival probabilities for risk models.")
    p.add_argument("config", help="JSON run configuration ('-' for stdin)")
    p.add_argument("--seed", type=int)
    p.add_argument("--paths", type=int)
    p.add_argument("--chunks", type=int)
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--emit-config", action="store_true", help="print the normalised config and exit")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def apply_overrides(config: RunConfig, args) -> RunConfig:
    mc = config.mc
    try:
        mc = MCConfig(
            paths=args.paths if args.paths is not None else mc.paths,
            horizon=mc.horizon,
            seed=args.seed if args.seed is not None else mc.seed,
            chunks=args.chunks if args.chunks is not None else mc.chunks,
        )
    except ValueError as exc:
        raise ConfigError(str(exc), "/mc") from None
    return dataclasses.replace(
        config,
        mc=mc,
        output_path=args.out if args.out is not None else config.output_path,
        output_format=args.format or config.output_format,
    )


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr)
    try:
        if args.config == "-":
            text, base = sys.stdin.read(), None
        else:
            if not os.path.exists(args.config):
                raise ConfigError(f"config file {args.config!r} does not exist")
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
            base = os.path.dirname(os.path.abspath(args.config))
        config = apply_overrides(parse_config(text, base), args)
    except RuinLabError as exc:
        return _report(exc, sys.stderr)
    if args.emit_config:
        sys.stdout.write(emit_config(config))
        return EXIT_OK
    log.info("running %s", config.command)
    return run(config)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
