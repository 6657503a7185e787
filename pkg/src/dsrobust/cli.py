"""Command-line front end.

Regenerates the reference tables and plot-ready datasets, evaluates acceptance
policies for user-supplied parameters, and runs simulations from config
files.  Human-facing formats (markdown, csv) print percentages; json carries
raw fractions.  Exit codes: 0 success, 2 usage, 3 parameter domain,
4 numerical failure.
"""
from __future__ import annotations

import json
import sys
from dataclasses import dataclass
from typing import Optional, Sequence

import click

from .core import (
    AttackerParams,
    ConstantPolicy,
    MajorityAttackerError,
    NoThresholdError,
    NumericalError,
    ParameterError,
)
from . import analytic
from .mdp import build_attack_mdp, extract_policy_table, solve_ratio
from .profit import build_profit_mdp, solve_profit
from .sim import SimConfig, simulate_finney_premine, simulate_total_policy, simulate_vector76

EXIT_PARAMETER = 3
EXIT_NUMERICAL = 4

#: alpha grid of the reference tables
DEFAULT_ALPHAS = (0.02, 0.06, 0.10, 0.14, 0.18, 0.22, 0.26, 0.30, 0.34, 0.38, 0.42, 0.46, 0.48, 0.50)
DEFAULT_CONFS = tuple(range(1, 11))

#: markdown cells below this percentage render as "~0%" (the data formats
#: keep the exact value)
TINY_PERCENT = 0.005


@dataclass(frozen=True)
class OutputSpec:
    format: str = "markdown"
    destination: Optional[str] = None
    precision: int = 4


def _emit(text: str, out: OutputSpec) -> None:
    if out.destination in (None, "-"):
        click.echo(text, nl=False)
    else:
        with open(out.destination, "w") as fh:
            fh.write(text)


def _pct(value: float, precision: int, markdown: bool) -> str:
    p = value * 100.0
    if markdown and p < TINY_PERCENT:
        return "~0%"
    s = f"{p:.{precision}f}%"
    return s


def _grid_text(
    alphas: Sequence[float],
    confs: Sequence[int],
    values: dict,  # (alpha, conf) -> float fraction or None
    out: OutputSpec,
    value_key: str,
) -> str:
    if out.format == "json":
        payload = {
            "alphas": list(alphas),
            "confirmations": list(confs),
            value_key: [[values[(a, c)] for c in confs] for a in alphas],
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"
    rows = []
    for a in alphas:
        cells = []
        for c in confs:
            v = values[(a, c)]
            if v is None:
                cells.append("")
            else:
                cells.append(_pct(v, out.precision, out.format == "markdown"))
        rows.append(cells)
    if out.format == "csv":
        lines = ["alpha," + ",".join(str(c) for c in confs)]
        for a, cells in zip(alphas, rows):
            lines.append(f"{a}," + ",".join(c.rstrip("%") for c in cells))
        return "\n".join(lines) + "\n"
    header = ["alpha\\conf"] + [str(c) for c in confs]
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    for a, cells in zip(alphas, rows):
        lines.append("| " + " | ".join([f"{a * 100:g}%"] + cells) + " |")
    return "\n".join(lines) + "\n"


def _check_alphas(alphas: Sequence[float], allow_half: bool) -> None:
    for a in alphas:
        if a < 0.0 or a > 1.0:
            raise ParameterError(f"alpha must lie in [0, 1], got {a}")
        if a > 0.5 or (a == 0.5 and not allow_half):
            raise ParameterError(
                f"alpha={a} has no minority-attacker guarantee (must be < 0.5)"
            )


class _ExitCodes(click.Group):
    """Translate domain errors into the documented exit codes."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except (MajorityAttackerError, ParameterError) as exc:
            click.echo(f"parameter error: {exc}", err=True)
            sys.exit(EXIT_PARAMETER)
        except (NumericalError, NoThresholdError) as exc:
            click.echo(f"numerical failure: {exc}", err=True)
            sys.exit(EXIT_NUMERICAL)


out_format_option = click.option(
    "--format", "fmt", type=click.Choice(["csv", "json", "markdown"]), default="markdown"
)
out_path_option = click.option("--out", "out_path", type=str, default=None, help="Output path (default stdout).")
precision_option = click.option("--precision", type=int, default=4, show_default=True)


@click.group(cls=_ExitCodes)
def main():
    """Double-spend robustness toolkit."""


@main.command("table-arb")
@click.option("--alpha", "alphas", type=float, multiple=True, help="Attacker hash shares (default: reference grid).")
@click.option("--conf", "-k", "confs", type=int, multiple=True, help="Confirmation counts (default: 1..10).")
@out_format_option
@out_path_option
@precision_option
def cmd_table_arb(alphas, confs, fmt, out_path, precision):
    """Reversal probability of an arbitrary accepted block, per (alpha, confs)."""
    alphas = tuple(alphas) or DEFAULT_ALPHAS
    confs = tuple(confs) or DEFAULT_CONFS
    if not confs:
        raise click.UsageError("at least one confirmation count is required")
    for c in confs:
        if c < 1:
            raise ParameterError(f"confirmation count must be >= 1, got {c}")
    _check_alphas(alphas, allow_half=True)
    out = OutputSpec(fmt, out_path, precision)
    values = {}
    for a in alphas:
        for c in confs:
            if a >= 0.5:
                values[(a, c)] = 1.0
            else:
                values[(a, c)] = analytic.arb_attack_prob(AttackerParams(a), c).value
    _emit(_grid_text(alphas, confs, values, out, "reversal_probability"), out)


normalization_option = click.option(
    "--normalization",
    type=click.Choice(["honest_accepted", "chain_growth"]),
    default="honest_accepted",
    show_default=True,
    help="Denominator convention; honest_accepted reproduces the reference "
    "tables, chain_growth normalizes by total accepted-chain growth.",
)


@main.command("table-frac")
@click.option("--alpha", "alphas", type=float, multiple=True, help="Attacker hash shares (default: reference grid).")
@click.option("--conf", "-k", "confs", type=int, multiple=True, help="Confirmation counts (default: 1..10).")
@click.option("--gamma", type=float, default=0.0, show_default=True)
@click.option("--max-len", type=int, default=60, show_default=True)
@click.option("--tol", type=float, default=1e-6, show_default=True)
@normalization_option
@out_format_option
@out_path_option
@precision_option
def cmd_table_frac(alphas, confs, gamma, max_len, tol, normalization, fmt, out_path, precision):
    """Optimal long-run fraction of accepted blocks an attacker reverses.

    Every cell is solved separately with its own optimal attack policy.
    """
    alphas = tuple(alphas) or DEFAULT_ALPHAS
    confs = tuple(confs) or DEFAULT_CONFS
    _check_alphas(alphas, allow_half=True)
    out = OutputSpec(fmt, out_path, precision)
    values = {}
    failures = []
    for a in alphas:
        for c in confs:
            if a >= 0.5:
                values[(a, c)] = 1.0
                continue
            try:
                model = build_attack_mdp(c, AttackerParams(a, gamma), max_len, normalization)
                values[(a, c)] = solve_ratio(model, tol=tol).value
            except NumericalError as exc:
                values[(a, c)] = None
                failures.append(f"alpha={a} conf={c}: {exc}")
    _emit(_grid_text(alphas, confs, values, out, "reversed_fraction"), out)
    if failures:
        for msg in failures:
            click.echo(f"cell failed: {msg}", err=True)
        sys.exit(EXIT_NUMERICAL)


@main.command("policy")
@click.option("--alpha", type=float, required=True)
@click.option("--gamma", type=float, default=0.0, show_default=True)
@click.option("--conf", "-k", "k", type=int, required=True)
@click.option("--max-len", type=int, default=60, show_default=True)
@click.option("--a-max", type=int, default=10, show_default=True)
@click.option("--h-max", type=int, default=10, show_default=True)
@click.option(
    "--cells",
    type=click.Choice(["auto", "single", "triple"]),
    default="auto",
    show_default=True,
    help="Render one action per cell or one per fork status.",
)
@click.option("--tol", type=float, default=1e-6, show_default=True)
@normalization_option
@out_format_option
@out_path_option
def cmd_policy(alpha, gamma, k, max_len, a_max, h_max, cells, tol, normalization, fmt, out_path):
    """Optimal attack-action grid; '*' marks unreachable states."""
    _check_alphas([alpha], allow_half=False)
    model = build_attack_mdp(k, AttackerParams(alpha, gamma), max_len, normalization)
    result = solve_ratio(model, tol=tol)
    table = extract_policy_table(result, a_max, h_max)
    triple = gamma > 0 if cells == "auto" else cells == "triple"
    out = OutputSpec(fmt, out_path)
    if fmt == "json":
        payload = {
            "alpha": alpha,
            "gamma": gamma,
            "k": k,
            "max_len": max_len,
            "reversed_fraction": result.value,
            "grid": {f"{a},{h}": "".join(table.cell(a, h)) for a in range(a_max + 1) for h in range(h_max + 1)},
        }
        _emit(json.dumps(payload, sort_keys=True, indent=2) + "\n", out)
    elif fmt == "csv":
        _emit(table.to_csv(triple=triple), out)
    else:
        _emit(table.to_markdown(triple=triple), out)


@main.command("recommend")
@click.option("--alpha", type=float, required=True)
@click.option("--gamma", type=float, default=0.0, show_default=True)
@click.option("--epsilon", type=float, required=True)
@click.option(
    "--model",
    "model_kind",
    type=click.Choice(["arb", "frac", "total", "spv"]),
    required=True,
    help="Security notion to certify.",
)
@click.option("--max-len", type=int, default=60, show_default=True, help="Truncation for the frac model search.")
@out_format_option
@out_path_option
@precision_option
def cmd_recommend(alpha, gamma, epsilon, model_kind, max_len, fmt, out_path, precision):
    """Recommend an acceptance policy certified for the chosen security notion."""
    out = OutputSpec(fmt, out_path, precision)
    try:
        params = AttackerParams(alpha, gamma)
        if alpha >= 0.5:
            raise MajorityAttackerError(
                f"alpha={alpha} >= 0.5: attacker can rewrite the chain at will"
            )
        record = _recommend(params, epsilon, model_kind, max_len)
    except MajorityAttackerError as exc:
        record = {
            "model": model_kind,
            "alpha": alpha,
            "gamma": gamma,
            "epsilon": epsilon,
            "policy": None,
            "result": "no safe policy exists",
            "reason": str(exc),
        }
        _emit(_render_recommend(record, out), out)
        sys.exit(EXIT_PARAMETER)
    _emit(_render_recommend(record, out), out)


def _recommend(params: AttackerParams, epsilon: float, model_kind: str, max_len: int) -> dict:
    record = {
        "model": model_kind,
        "alpha": params.alpha,
        "gamma": params.gamma,
        "epsilon": epsilon,
    }
    if model_kind == "arb":
        n = analytic.sigma_arb(params, epsilon)
        bound = analytic.arb_attack_prob(params, n)
        record["policy"] = {"kind": "constant", "k": n}
        record["bound"] = bound.value
        record["bound_kind"] = bound.kind.value
    elif model_kind == "spv":
        ks = analytic.sigma_spv(params, epsilon)
        bound = analytic.spv_attack_bound(params, ks)
        record["policy"] = {"kind": "constant", "k": ks}
        record["bound"] = bound.value
        record["bound_kind"] = bound.kind.value
    elif model_kind == "total":
        consts = analytic.total_policy_constants(params, epsilon)
        record["policy"] = {
            "kind": "logarithmic",
            "base_confs": consts.c_eps,
            "base": consts.b_alpha,
        }
        record["bound"] = epsilon
        record["bound_kind"] = "total"
    else:  # frac: search the smallest k whose optimal attack stays below epsilon
        for k in range(1, 101):
            value = solve_ratio(build_attack_mdp(k, params, max_len)).value
            if value < epsilon:
                record["policy"] = {"kind": "constant", "k": k}
                record["bound"] = value
                record["bound_kind"] = "fractional"
                break
        else:
            raise NoThresholdError(
                f"no constant policy up to k=100 certifies epsilon={epsilon}"
            )
    return record


def _render_recommend(record: dict, out: OutputSpec) -> str:
    if out.format == "json":
        return json.dumps(record, sort_keys=True, indent=2) + "\n"
    lines = []
    if out.format == "markdown":
        for key in sorted(record):
            lines.append(f"- **{key}**: {record[key]}")
    else:
        lines.append(",".join(sorted(record)))
        lines.append(",".join(str(record[k]) for k in sorted(record)))
    return "\n".join(lines) + "\n"


@main.command("simulate")
@click.argument("config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--trials", type=int, default=None, help="Override the config's trial count.")
@click.option("--seed", type=int, default=None, help="Override the config's seed.")
@out_format_option
@out_path_option
def cmd_simulate(config_path, trials, seed, fmt, out_path):
    """Run a named simulation experiment from a JSON config file.

    Config keys: experiment (finney | vector76 | total), alpha, gamma, k or
    (epsilon, chain_length), trials, seed, burn_in_steps, max_steps_per_trial,
    conditional_trials.  See the README for the full schema.
    """
    with open(config_path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise click.UsageError(
                f"malformed config {config_path}: line {exc.lineno} column {exc.colno}: {exc.msg}"
            )
    if trials is not None:
        raw["trials"] = trials
    if seed is not None:
        raw["seed"] = seed
    known = {
        "experiment", "alpha", "gamma", "k", "epsilon", "chain_length",
        "trials", "seed", "burn_in_steps", "max_steps_per_trial",
        "conditional_trials",
    }
    unknown = set(raw) - known
    if unknown:
        raise click.UsageError(f"unknown config fields: {sorted(unknown)}")
    experiment = raw.get("experiment")
    if experiment not in ("finney", "vector76", "total"):
        raise click.UsageError(f"unknown experiment {experiment!r}")
    if "alpha" not in raw:
        raise click.UsageError("config field 'alpha' is required")

    params = AttackerParams(float(raw["alpha"]), float(raw.get("gamma", 0.0)))
    out = OutputSpec(fmt, out_path)
    if experiment == "total":
        for fld in ("epsilon", "chain_length"):
            if fld not in raw:
                raise click.UsageError(f"config field '{fld}' is required for total")
        result = simulate_total_policy(
            params,
            float(raw["epsilon"]),
            int(raw["chain_length"]),
            int(raw.get("trials", 1000)),
            int(raw.get("seed", 0)),
        )
        payload = {
            "experiment": "total",
            "any_success_frequency": result.any_success_frequency,
            "standard_error": result.standard_error,
            "trials": result.trials,
            "chain_length": result.chain_length,
            "policy": result.policy_echo,
            "config": raw,
        }
        _emit(json.dumps(payload, sort_keys=True, indent=2) + "\n", out)
        return

    if "k" not in raw:
        raise click.UsageError(f"config field 'k' is required for {experiment}")
    config = SimConfig(
        params=params,
        policy=ConstantPolicy(int(raw["k"])),
        trials=int(raw.get("trials", 100_000)),
        seed=int(raw.get("seed", 0)),
        burn_in_steps=int(raw.get("burn_in_steps", 10_000)),
        max_steps_per_trial=int(raw.get("max_steps_per_trial", 1_000_000)),
        conditional_trials=(
            int(raw["conditional_trials"]) if "conditional_trials" in raw else None
        ),
    )
    run = simulate_finney_premine if experiment == "finney" else simulate_vector76
    report = run(config, int(raw["k"]))
    _emit(report.to_json() + "\n", out)


@main.command("profit-curve")
@click.option("--alpha", "alphas", type=float, multiple=True, required=True)
@click.option("--gamma", type=float, default=0.0, show_default=True)
@click.option("--reward", "-R", "ds_reward", type=float, default=2.0, show_default=True)
@click.option("--conf", "-k", "k", type=int, default=6, show_default=True)
@click.option("--max-len", type=int, default=60, show_default=True)
@click.option("--tol", type=float, default=1e-6, show_default=True)
@out_format_option
@out_path_option
@precision_option
def cmd_profit_curve(alphas, gamma, ds_reward, k, max_len, tol, fmt, out_path, precision):
    """Optimal combined mining/double-spend revenue vs the honest baseline."""
    _check_alphas(alphas, allow_half=False)
    out = OutputSpec(fmt, out_path, precision)
    rows = []
    for a in alphas:
        model = build_profit_mdp(k, AttackerParams(a, gamma), ds_reward, max_len)
        value = solve_profit(model, tol=tol).value
        rows.append({
            "alpha": a,
            "gamma": gamma,
            "R": ds_reward,
            "k": k,
            "revenue": value,
            "honest_baseline": a,
        })
    if fmt == "json":
        _emit(json.dumps(rows, sort_keys=True, indent=2) + "\n", out)
        return
    header = ["alpha", "gamma", "R", "k", "revenue", "honest_baseline"]
    if fmt == "csv":
        lines = [",".join(header)]
        for r in rows:
            lines.append(
                f"{r['alpha']},{r['gamma']},{r['R']},{r['k']},"
                f"{r['revenue']:.{precision + 2}f},{r['honest_baseline']}"
            )
        _emit("\n".join(lines) + "\n", out)
        return
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    for r in rows:
        lines.append(
            f"| {r['alpha']} | {r['gamma']} | {r['R']} | {r['k']} | "
            f"{r['revenue']:.{precision}f} | {r['honest_baseline']} |"
        )
    _emit("\n".join(lines) + "\n", out)


if __name__ == "__main__":
    main()
