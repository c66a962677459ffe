"""Batch front end: parse experiment configs, run solves, emit traces and reports.

Config format: one `key = value` per line, dotted keys for sections, values
in JSON (strings quoted, lists bracketed).  Unknown keys are rejected.
Artifacts per run: a trace CSV with the stable header
`r,f,delta,step_sq,virt_step_sq,grad_diff_sq,blocks,descent_slack`, a JSON
report with the certificate and check results, plus one summary CSV per
experiment.  Identical config and seed produce byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import models
from .diagnostics import (
    CheckReport,
    check_cost_to_go,
    check_rate_envelope,
    check_sufficient_descent,
    check_nesterov_inequality,
    estimate_constants,
    fd_gradient_check,
    fit_decay_exponent,
    sigma_for,
)
from .engine import ReferenceSolution, Trace, reference_solve, run_a2bsum, run_bsum, run_sum
from .problem import Problem, project_feasible
from .schedule import RULES, make_schedule
from .surrogate import make_surrogate

OUTPUT_DIR_ENV = "BSUMKIT_OUTPUT_DIR"
TRACE_HEADER = "r,f,delta,step_sq,virt_step_sq,grad_diff_sq,blocks,descent_slack"
SUITES = ("descent", "cost-to-go", "envelope", "nesterov", "fd")
SURROGATE_KINDS = ("exact", "prox-linear", "mixed", "model-custom")
ALGORITHMS = ("bsum", "sum", "a2bsum")

MODEL_KEYS = {
    "lasso": {"family", "seed", "m", "n", "lam", "density", "blocks", "file_A", "file_b"},
    "group-lasso": {"family", "seed", "m", "sizes", "weight", "deficient"},
    "logistic": {"family", "seed", "rows", "n", "weight"},
    "l2svm": {"family", "seed", "rows", "n", "l1_weight", "file_rows"},
    "quadratic": {"family", "seed", "sizes", "rank_deficit", "file_Q", "file_c", "blocks"},
    "two-block-quadratic": {"family", "seed", "n_inner", "n_outer", "zero_eigs", "min_pos"},
    "fermat-weber": {"family", "seed", "terms", "n", "eta"},
}

RUN_KEYS = {
    "model", "surrogate", "surrogate_kinds", "rule", "q", "period_map",
    "iterations", "tolerance", "algorithm", "outer", "inner",
    "record_virtual", "record_grad_diffs", "compute_auxiliary", "schedule_seed",
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    run_id: str
    model: dict
    surrogate: str = "prox-linear"
    surrogate_kinds: Optional[tuple[str, ...]] = None
    rule: str = "gauss-seidel"
    q: float = 1.0
    period_map: Optional[tuple[tuple[int, ...], ...]] = None
    iterations: int = 200
    tolerance: float = 0.0
    algorithm: str = "bsum"
    outer: int = 1
    inner: int = 0
    record_virtual: Optional[bool] = None
    record_grad_diffs: Optional[bool] = None
    compute_auxiliary: bool = False
    schedule_seed: Optional[int] = None


@dataclass
class ExperimentSpec:
    seed: int
    runs: list[RunConfig]
    suites: tuple[str, ...] = ("descent", "cost-to-go", "envelope")
    output_dir: Optional[str] = None


@dataclass
class RunResult:
    run_id: str
    config: RunConfig
    problem: Problem
    trace: Trace
    reference: ReferenceSolution
    certificate: Optional[object]
    checks: list = field(default_factory=list)
    envelopes: list = field(default_factory=list)
    fitted_slope: Optional[float] = None
    final_delta: float = float("nan")
    all_passed: bool = True
    error: Optional[str] = None


# ---------------------------------------------------------------------------
# config parsing


def _parse_lines(path: str) -> dict:
    flat = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key = key.strip()
            try:
                parsed = json.loads(value.strip())
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}:{lineno}: bad JSON value for {key!r}: {exc}")
            if key in flat:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            flat[key] = parsed
    return flat


def _expected_block_count(model: dict) -> Optional[int]:
    fam = model.get("family")
    if fam == "lasso":
        if "blocks" in model:
            return len(model["blocks"])
        return model.get("n")
    if fam == "group-lasso":
        return len(model["sizes"]) if "sizes" in model else None
    if fam in ("logistic", "l2svm"):
        return model.get("n")
    if fam == "quadratic":
        if "blocks" in model:
            return len(model["blocks"])
        return len(model["sizes"]) if "sizes" in model else 1
    if fam == "two-block-quadratic":
        return 2
    if fam == "fermat-weber":
        return 1
    return None


def parse_config(path: str) -> ExperimentSpec:
    """Strict parse: unknown keys rejected, rule parameters validated."""
    flat = _parse_lines(path)
    runs_raw: dict[str, dict] = {}
    top: dict = {}
    for key, value in flat.items():
        parts = key.split(".")
        if parts[0] == "run":
            if len(parts) < 3:
                raise ConfigError(f"run key {key!r} must look like run.<id>.<field>")
            run_id = parts[1]
            field_path = parts[2:]
            bucket = runs_raw.setdefault(run_id, {})
            if field_path[0] == "model":
                if len(field_path) != 2:
                    raise ConfigError(f"model key {key!r} must look like run.<id>.model.<field>")
                bucket.setdefault("model", {})[field_path[1]] = value
            elif len(field_path) == 1:
                bucket[field_path[0]] = value
            else:
                raise ConfigError(f"unknown run field {'.'.join(field_path)!r} in {key!r}")
        elif len(parts) == 1 and parts[0] in ("seed", "suites", "output_dir"):
            top[parts[0]] = value
        else:
            raise ConfigError(f"unknown config key {key!r}")

    if not runs_raw:
        raise ConfigError("config defines no runs")
    seed = int(top.get("seed", 0))
    suites = tuple(top.get("suites", ["descent", "cost-to-go", "envelope"]))
    for s in suites:
        if s not in SUITES:
            raise ConfigError(f"unknown suite {s!r}; expected subset of {SUITES}")

    runs = []
    for run_id, bucket in runs_raw.items():
        unknown = set(bucket) - RUN_KEYS
        if unknown:
            raise ConfigError(f"run {run_id!r}: unknown fields {sorted(unknown)}")
        model = bucket.get("model")
        if not model or "family" not in model:
            raise ConfigError(f"run {run_id!r}: model.family is required")
        fam = model["family"]
        if fam not in MODEL_KEYS:
            raise ConfigError(
                f"run {run_id!r}: unsupported model family {fam!r}"
            )
        bad = set(model) - MODEL_KEYS[fam]
        if bad:
            raise ConfigError(f"run {run_id!r}: unknown model fields {sorted(bad)}")

        rule = bucket.get("rule", "gauss-seidel")
        if rule not in RULES:
            raise ConfigError(f"run {run_id!r}: unknown rule {rule!r}")
        q = float(bucket.get("q", 1.0))
        if rule == "gauss-southwell" and not 0.0 < q <= 1.0:
            raise ConfigError(f"run {run_id!r}: q must lie in (0,1]")
        surrogate = bucket.get("surrogate", "prox-linear")
        if surrogate not in SURROGATE_KINDS:
            raise ConfigError(f"run {run_id!r}: unknown surrogate {surrogate!r}")
        algorithm = bucket.get("algorithm", "bsum")
        if algorithm not in ALGORITHMS:
            raise ConfigError(f"run {run_id!r}: unknown algorithm {algorithm!r}")
        iterations = int(bucket.get("iterations", 200))
        if iterations < 1:
            raise ConfigError(f"run {run_id!r}: iterations must be >= 1")
        tolerance = float(bucket.get("tolerance", 0.0))
        if tolerance < 0:
            raise ConfigError(f"run {run_id!r}: tolerance must be >= 0")

        period_map = bucket.get("period_map")
        if rule == "essentially-cyclic":
            if period_map is None:
                raise ConfigError(
                    f"run {run_id!r}: essentially-cyclic rule needs period_map"
                )
            n_blocks = _expected_block_count(model)
            if n_blocks is not None:
                covered = set()
                for slot in period_map:
                    covered.update(int(i) for i in slot)
                missing = sorted(set(range(n_blocks)) - covered)
                if missing:
                    raise ConfigError(
                        f"run {run_id!r}: period map does not cover block "
                        f"indices {missing}"
                    )
            period_map = tuple(tuple(int(i) for i in slot) for slot in period_map)

        kinds = bucket.get("surrogate_kinds")
        runs.append(RunConfig(
            run_id=run_id, model=model, surrogate=surrogate,
            surrogate_kinds=None if kinds is None else tuple(kinds),
            rule=rule, q=q, period_map=period_map, iterations=iterations,
            tolerance=tolerance, algorithm=algorithm,
            outer=int(bucket.get("outer", 1)), inner=int(bucket.get("inner", 0)),
            record_virtual=bucket.get("record_virtual"),
            record_grad_diffs=bucket.get("record_grad_diffs"),
            compute_auxiliary=bool(bucket.get("compute_auxiliary", False)),
            schedule_seed=bucket.get("schedule_seed"),
        ))
    return ExperimentSpec(
        seed=seed, runs=runs, suites=suites, output_dir=top.get("output_dir"),
    )


# ---------------------------------------------------------------------------
# model construction


def build_model(model: dict, default_seed: int) -> Problem:
    fam = model["family"]
    seed = int(model.get("seed", default_seed))
    if fam == "lasso":
        if "file_A" in model:
            A = models.read_matrix(model["file_A"])
            b = models.read_matrix(model["file_b"]).ravel()
            lam = float(model["lam"])
        else:
            A, b, lam = models.gen_lasso(
                int(model["m"]), int(model["n"]), float(model["lam"]),
                seed, density=float(model.get("density", 1.0)),
            )
        return models.build_lasso(A, b, lam, block_sizes=model.get("blocks"))
    if fam == "group-lasso":
        mats, b, weights = models.gen_group_lasso(
            int(model["m"]), [int(s) for s in model["sizes"]],
            float(model.get("weight", 0.0)), seed,
            deficient=model.get("deficient", ()),
        )
        return models.build_group_lasso(mats, b, weights)
    if fam == "logistic":
        A, y, w = models.gen_logistic(
            int(model["rows"]), int(model["n"]), float(model.get("weight", 0.0)), seed
        )
        return models.build_logistic(A, y, w)
    if fam == "l2svm":
        if "file_rows" in model:
            rows = models.read_matrix(model["file_rows"])
        else:
            rows = models.gen_l2svm(int(model["rows"]), int(model["n"]), seed)
        return models.build_l2svm(rows, l1_weight=float(model.get("l1_weight", 0.0)))
    if fam == "quadratic":
        if "file_Q" in model:
            Q = models.read_matrix(model["file_Q"])
            c = models.read_matrix(model["file_c"]).ravel()
            sizes = model.get("blocks")
        else:
            sizes = [int(s) for s in model["sizes"]]
            Q, c = models.gen_quadratic(sizes, seed,
                                        rank_deficit=int(model.get("rank_deficit", 0)))
        return models.build_quadratic(Q, c, block_sizes=sizes)
    if fam == "two-block-quadratic":
        Q, c, sizes = models.gen_two_block_quadratic(
            int(model["n_inner"]), int(model["n_outer"]), seed,
            zero_eigs=int(model.get("zero_eigs", 1)),
            min_pos=float(model.get("min_pos", 1e-4)),
        )
        return models.build_quadratic(Q, c, block_sizes=list(sizes))
    if fam == "fermat-weber":
        mats, offsets = models.gen_fermat_weber(int(model["terms"]), int(model["n"]), seed)
        return models.build_irls(mats, offsets, float(model["eta"]))
    raise ConfigError(f"unsupported model family {fam!r}")


# ---------------------------------------------------------------------------
# per-run execution and checks


def _run_algorithm(cfg: RunConfig, problem: Problem, surrogate) -> Trace:
    meta = {"run_id": cfg.run_id, "seed": cfg.model.get("seed")}
    if cfg.algorithm == "a2bsum":
        return run_a2bsum(problem, outer=cfg.outer, inner=cfg.inner,
                          iterations=cfg.iterations, meta=meta)
    if cfg.algorithm == "sum":
        return run_sum(problem, surrogate, iterations=cfg.iterations,
                       tol=cfg.tolerance, compute_auxiliary=cfg.compute_auxiliary,
                       meta=meta)
    schedule = make_schedule(cfg.rule, problem.n_blocks, period_map=cfg.period_map,
                             q=cfg.q, seed=cfg.schedule_seed)
    return run_bsum(
        problem, surrogate, schedule, iterations=cfg.iterations, tol=cfg.tolerance,
        record_virtual=cfg.record_virtual, record_grad_diffs=cfg.record_grad_diffs,
        meta=meta,
    )


def _plan_descent_variants(rule: str, kind: str) -> list[str]:
    plan = ["gs-ec" if rule in ("gauss-seidel", "essentially-cyclic",
                                "random-permutation") else "gso-mbi"]
    if kind == "exact" and rule in ("gauss-seidel", "essentially-cyclic",
                                    "random-permutation"):
        plan.append("bcm")
    return plan


def _plan_cost_variants(rule: str, kind: str, cert) -> list[str]:
    plan = []
    if rule in ("gauss-seidel", "random-permutation"):
        if cert.g_max is not None:
            plan.append("gs")
        if kind == "exact":
            plan.append("bcm-gs")
    elif rule == "essentially-cyclic":
        if cert.g_max is not None:
            plan.append("ec")
    else:
        plan.append("gso-mbi")
    return plan


def _plan_envelopes(cfg: RunConfig, problem: Problem, surrogate, cert) -> list[tuple[str, dict]]:
    plan: list[tuple[str, dict]] = []
    if cfg.algorithm == "sum":
        plan.append(("sum", {"lip": surrogate.l_max}))
        return plan
    rule, kind = cfg.rule, surrogate.kind
    strongly = cert.gamma > 0 and cert.g_max is not None
    if rule in ("gauss-seidel", "random-permutation") and strongly:
        plan.append(("bsum-gs", {}))
    if rule == "essentially-cyclic" and strongly:
        plan.append(("bsum-ec", {}))
    if rule == "gauss-southwell" and cert.gamma > 0:
        plan.append(("bsum-gso", {}))
    if rule == "mbi" and cert.gamma > 0:
        plan.append(("bsum-mbi", {}))
    if kind == "exact":
        if rule in ("gauss-seidel", "random-permutation"):
            plan.append(("bcm-gs", {}))
            if problem.composite is not None:
                plan.append(("composite-gs", {"composite": problem.composite}))
            if problem.svm is not None:
                plan.append(("l2svm-gs", {"svm": problem.svm}))
        if rule == "essentially-cyclic":
            plan.append(("bcm-ec", {}))
    return plan


def execute_run(cfg: RunConfig, spec: ExperimentSpec, reference_cache: dict) -> RunResult:
    problem = build_model(cfg.model, spec.seed)
    surrogate = None
    if cfg.algorithm != "a2bsum":
        surrogate = make_surrogate(problem, cfg.surrogate, kinds=cfg.surrogate_kinds)
    trace = _run_algorithm(cfg, problem, surrogate)

    key = json.dumps(cfg.model, sort_keys=True) + f"|{spec.seed}"
    if key not in reference_cache:
        reference_cache[key] = reference_solve(problem)
    ref = reference_cache[key]
    trace.attach_reference(ref.x, ref.f)

    result = RunResult(
        run_id=cfg.run_id, config=cfg, problem=problem, trace=trace,
        reference=ref, certificate=None,
    )
    result.final_delta = float(trace.deltas()[-1])
    try:
        result.fitted_slope = fit_decay_exponent(trace, burn_in=max(1, cfg.iterations // 10))
    except ValueError:
        result.fitted_slope = None

    if cfg.algorithm == "a2bsum":
        return result  # no descent certificates for the non-monotone scheme

    cert = estimate_constants(problem, surrogate, trace)
    result.certificate = cert
    if "descent" in spec.suites:
        for variant in _plan_descent_variants(cfg.rule, surrogate.kind):
            result.checks.append(check_sufficient_descent(trace, cert, variant))
    if "cost-to-go" in spec.suites:
        for variant in _plan_cost_variants(cfg.rule, surrogate.kind, cert):
            result.checks.append(check_cost_to_go(trace, cert, variant))
    if "envelope" in spec.suites:
        for rate_id, extra in _plan_envelopes(cfg, problem, surrogate, cert):
            sigma, c, offset = sigma_for(rate_id, cert, problem.n_blocks, **extra)
            rep = check_rate_envelope(trace, sigma, c, offset, label=rate_id)
            result.envelopes.append(
                {"id": rate_id, "sigma": sigma, "c": c, "offset": offset,
                 "max_violation": rep.max_violation, "passed": rep.passed}
            )
    if "nesterov" in spec.suites:
        result.checks.append(check_nesterov_inequality(problem))
    if "fd" in spec.suites:
        rng = np.random.default_rng([0xFD, spec.seed])
        pts = [project_feasible(problem, rng.standard_normal(problem.dim))
               for _ in range(5)]
        err = fd_gradient_check(problem, pts)
        result.checks.append(_fd_report(err))
    result.all_passed = all(c.passed for c in result.checks) and all(
        e["passed"] for e in result.envelopes
    )
    return result


def _fd_report(err: float) -> CheckReport:
    tol = 1e-5
    return CheckReport(
        check_id="fd-gradient", variant="points", slacks=np.array([tol - err]),
        max_violation=max(0.0, err - tol), tolerance=tol,
        passed=err <= tol, n_checked=1,
    )


# ---------------------------------------------------------------------------
# artifacts


def _fmt(v) -> str:
    if v is None:
        return ""
    return format(float(v), ".17g")


def trace_csv_text(trace: Trace) -> str:
    lines = [TRACE_HEADER]
    f_star = trace.f_star
    for rec in trace.records:
        delta = None if f_star is None else rec.f - f_star
        blocks = "" if rec.blocks is None else ";".join(str(b) for b in rec.blocks)
        lines.append(",".join([
            str(rec.r), _fmt(rec.f), _fmt(delta), _fmt(rec.step_sq),
            _fmt(rec.virt_step_sq), _fmt(rec.grad_diff_sq), blocks,
            _fmt(rec.descent_slack),
        ]))
    return "\n".join(lines) + "\n"


def _atomic_write(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def run_report(result: RunResult) -> dict:
    cfg = result.config
    report = {
        "run_id": result.run_id,
        "model": cfg.model,
        "algorithm": cfg.algorithm,
        "rule": cfg.rule,
        "surrogate": cfg.surrogate,
        "iterations": result.trace.n_iterations,
        "reference": {
            "f_star": result.reference.f,
            "converged": result.reference.converged,
            "sweeps": result.reference.sweeps,
        },
        "final_delta": result.final_delta,
        "fitted_slope": result.fitted_slope,
        "checks": [c.to_dict() for c in result.checks],
        "envelopes": result.envelopes,
        "all_passed": result.all_passed,
        "warnings": result.trace.meta.get("warnings", []),
    }
    if result.certificate is not None:
        report["certificate"] = result.certificate.to_dict()
    return report


def run_experiment(spec: ExperimentSpec, output_dir: Optional[str] = None) -> tuple[list[RunResult], int]:
    """Execute every run, write artifacts, and return (results, exit_code)."""
    out = output_dir or os.environ.get(OUTPUT_DIR_ENV) or spec.output_dir or "bsumkit-out"
    os.makedirs(out, exist_ok=True)
    results: list[RunResult] = []
    cache: dict = {}
    hard_error = False
    for cfg in spec.runs:
        try:
            result = execute_run(cfg, spec, cache)
        except Exception as exc:  # recorded per run, experiment continues
            hard_error = True
            results.append(RunResult(
                run_id=cfg.run_id, config=cfg, problem=None, trace=None,
                reference=None, certificate=None, all_passed=False,
                error=f"{type(exc).__name__}: {exc}",
            ))
            continue
        _atomic_write(os.path.join(out, f"{cfg.run_id}.trace.csv"),
                      trace_csv_text(result.trace))
        _atomic_write(os.path.join(out, f"{cfg.run_id}.report.json"),
                      json.dumps(run_report(result), indent=2, sort_keys=True) + "\n")
        results.append(result)

    rows = ["run_id,rule,surrogate,final_delta,fitted_slope,all_checks_pass"]
    for res in results:
        if res.error is not None:
            rows.append(f"{res.run_id},{res.config.rule},{res.config.surrogate},,,error")
            continue
        slope = "" if res.fitted_slope is None else _fmt(res.fitted_slope)
        rows.append(",".join([
            res.run_id, res.config.rule, res.config.surrogate,
            _fmt(res.final_delta), slope, str(res.all_passed).lower(),
        ]))
    _atomic_write(os.path.join(out, "summary.csv"), "\n".join(rows) + "\n")

    if hard_error:
        return results, 2
    if any(not r.all_passed for r in results):
        return results, 3
    return results, 0


# ---------------------------------------------------------------------------
# trace comparison


def compare_traces(paths: list[str]) -> str:
    """Join gap columns of several trace CSVs on the iteration index."""
    columns = []
    names = []
    seen: dict[str, int] = {}
    for path in paths:
        stem = os.path.basename(path)
        for suffix in (".trace.csv", ".csv"):
            if stem.endswith(suffix):
                stem = stem[: -len(suffix)]
                break
        seen[stem] = seen.get(stem, 0) + 1
        if seen[stem] > 1:
            stem = f"{stem}_{seen[stem]}"
        names.append(stem)
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or "r" not in reader.fieldnames \
                    or "delta" not in reader.fieldnames:
                raise ValueError(f"{path}: not a trace CSV")
            col = {}
            for row in reader:
                col[int(row["r"])] = row["delta"]
            columns.append(col)
    last = max(max(col) for col in columns if col)
    lines = ["r," + ",".join(f"delta_{n}" for n in names)]
    for r in range(0, last + 1):
        lines.append(str(r) + "," + ",".join(col.get(r, "") for col in columns))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# certify: re-run a recorded trace from its config and check it


def certify(trace_path: str, config_path: str, run_id: Optional[str] = None) -> tuple[dict, int]:
    spec = parse_config(config_path)
    if run_id is None:
        stem = os.path.basename(trace_path)
        if stem.endswith(".trace.csv"):
            run_id = stem[: -len(".trace.csv")]
    matches = [cfg for cfg in spec.runs if cfg.run_id == run_id]
    if len(spec.runs) == 1 and not matches:
        matches = [spec.runs[0]]
    if len(matches) != 1:
        raise ConfigError(
            f"cannot match trace to a unique run (run_id={run_id!r}); "
            f"config defines {[c.run_id for c in spec.runs]}"
        )
    cfg = matches[0]
    result = execute_run(cfg, spec, {})
    produced = trace_csv_text(result.trace)
    with open(trace_path, "r", encoding="utf-8") as fh:
        stored = fh.read()
    if produced != stored:
        return ({"run_id": cfg.run_id, "match": False,
                 "detail": "stored trace differs from the deterministic re-run"}, 2)
    report = run_report(result)
    report["match"] = True
    return report, 0 if result.all_passed else 3


# ---------------------------------------------------------------------------
# instance generation


def generate_instance(family: str, params: dict, prefix: str) -> list[str]:
    seed = int(params.get("seed", 0))
    written = []

    def put(tag, M):
        path = f"{prefix}_{tag}.txt"
        models.write_matrix(path, M)
        written.append(path)

    if family == "lasso":
        A, b, _ = models.gen_lasso(int(params["m"]), int(params["n"]),
                                   float(params.get("lam", 1.0)), seed,
                                   density=float(params.get("density", 1.0)))
        put("A", A)
        put("b", b.reshape(-1, 1))
    elif family == "l2svm":
        rows = models.gen_l2svm(int(params["rows"]), int(params["n"]), seed)
        put("rows", rows)
    elif family == "logistic":
        A, y, _ = models.gen_logistic(int(params["rows"]), int(params["n"]), 0.0, seed)
        put("A", A)
        put("y", y.reshape(-1, 1))
    elif family == "quadratic":
        Q, c = models.gen_quadratic([int(s) for s in params["sizes"]], seed,
                                    rank_deficit=int(params.get("rank_deficit", 0)))
        put("Q", Q)
        put("c", c.reshape(-1, 1))
    elif family == "two-block-quadratic":
        Q, c, _ = models.gen_two_block_quadratic(
            int(params["n_inner"]), int(params["n_outer"]), seed,
            zero_eigs=int(params.get("zero_eigs", 1)),
            min_pos=float(params.get("min_pos", 1e-4)))
        put("Q", Q)
        put("c", c.reshape(-1, 1))
    elif family == "group-lasso":
        mats, b, _ = models.gen_group_lasso(
            int(params["m"]), [int(s) for s in params["sizes"]],
            float(params.get("weight", 0.0)), seed,
            deficient=params.get("deficient", ()))
        for k, Ak in enumerate(mats):
            put(f"A{k}", Ak)
        put("b", b.reshape(-1, 1))
    elif family == "fermat-weber":
        mats, offsets = models.gen_fermat_weber(int(params["terms"]), int(params["n"]), seed)
        put("P", -np.array(offsets))
    else:
        raise ConfigError(f"unsupported model family {family!r}")
    return written


# ---------------------------------------------------------------------------
# entry point


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="bsumkit",
        description="Block-coordinate upper-bound minimization runs and diagnostics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an experiment config")
    p_run.add_argument("config")
    p_run.add_argument("-o", "--output-dir", default=None)

    p_cert = sub.add_parser("certify", help="re-run a trace's config and check it")
    p_cert.add_argument("trace")
    p_cert.add_argument("config")
    p_cert.add_argument("--run-id", default=None)
    p_cert.add_argument("-o", "--output", default=None)

    p_cmp = sub.add_parser("compare", help="align gap columns of several traces")
    p_cmp.add_argument("traces", nargs="+")
    p_cmp.add_argument("-o", "--output", default=None)

    p_gen = sub.add_parser("gen", help="write a seeded instance to text files")
    p_gen.add_argument("family")
    p_gen.add_argument("--params", default="{}",
                       help="JSON dict of family parameters (dims, density, seed)")
    p_gen.add_argument("-o", "--output-prefix", required=True)

    args = parser.parse_args(argv)

    if args.command == "run":
        try:
            spec = parse_config(args.config)
        except (ConfigError, OSError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 1
        results, code = run_experiment(spec, output_dir=args.output_dir)
        for res in results:
            status = "error" if res.error else ("ok" if res.all_passed else "check-failed")
            detail = res.error or f"final_delta={res.final_delta:.6g}"
            print(f"{res.run_id}: {status} ({detail})")
        return code

    if args.command == "certify":
        try:
            report, code = certify(args.trace, args.config, run_id=args.run_id)
        except (ConfigError, OSError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 1
        text = json.dumps(report, indent=2, sort_keys=True)
        if args.output:
            _atomic_write(args.output, text + "\n")
        else:
            print(text)
        return code

    if args.command == "compare":
        try:
            text = compare_traces(args.traces)
        except (ValueError, OSError) as exc:
            print(f"compare error: {exc}", file=sys.stderr)
            return 2
        if args.output:
            _atomic_write(args.output, text)
        else:
            sys.stdout.write(text)
        return 0

    if args.command == "gen":
        try:
            params = json.loads(args.params)
            written = generate_instance(args.family, params, args.output_prefix)
        except (ConfigError, ValueError, KeyError) as exc:
            print(f"gen error: {exc}", file=sys.stderr)
            return 1
        for path in written:
            print(path)
        return 0

    return 1


if __name__ == "__main__":
    raise SystemExit(main())
