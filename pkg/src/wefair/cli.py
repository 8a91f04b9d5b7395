"""Command line interface.

Exit codes: 0 success, 1 invalid input, 2 unreadable or unparsable files,
3 a built-in example no longer reproduces.
"""

from __future__ import annotations

import csv
import functools
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import datasets
from .analytics import (
    approval_rate,
    audit,
    check_theorem1,
    revenue,
    welfare_pair,
)
from .concepts import ConceptSpec, conditional_rate, load_concept, make_utility
from .exceptions import UndefinedConditional, WEFairError
from .population import dump_population, from_samples, load_alpha_table, load_population, read_samples_csv
from .solver import (
    objective_curve,
    solve_unaware,
    solve_unconstrained,
    solve_we,
    solve_we_bisection,
    welfare_curve,
)

EXAMPLES = {
    "ex1": datasets.example1,
    "unaware": datasets.unawareness_example,
    "dp_harm": datasets.dp_harm_example,
    "eo_harm": datasets.eo_harm_example,
    "symmetric": datasets.symmetric_example,
}

REPAYMENT = ConceptSpec("equalized_odds_member", alpha=1.0, beta=0.0)


class ExampleMismatch(Exception):
    pass


def _handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except WEFairError as exc:
            click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
            sys.exit(1)
        except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
            click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
            sys.exit(2)

    return wrapper


def _population(population, example):
    if (population is None) == (example is None):
        raise click.UsageError("give exactly one of --population or --example")
    if example is not None:
        return EXAMPLES[example]()
    return load_population(population)


def _concept(concept, kind) -> ConceptSpec:
    if (concept is None) == (kind is None):
        raise click.UsageError("give exactly one of --concept or --kind")
    if kind is not None:
        return REPAYMENT if kind == "repayment" else ConceptSpec(kind)
    return load_concept(concept)


def _fmt(v: float) -> str:
    return f"{v:.12g}"


def _write_json(path: Path, doc) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


population_opts = [
    click.option("--population", "-p", type=click.Path(dir_okay=False), help="Population JSON file."),
    click.option("--example", type=click.Choice(sorted(EXAMPLES)), help="Use a built-in population."),
]
concept_opts = [
    click.option("--concept", "-c", type=click.Path(dir_okay=False), help="Concept JSON file."),
    click.option(
        "--kind",
        type=click.Choice(["demographic_parity", "equal_opportunity", "repayment"]),
        help="Concept by name; 'repayment' is u(x,a,y) = y.",
    ),
]
common_opts = [
    click.option("--eo-unnormalized", is_flag=True, help="Use u = 1{y=1} for equal opportunity without group normalization."),
    click.option("--tol", type=float, default=1e-9, show_default=True, help="Reporting tolerance."),
]


def _apply(opts):
    def deco(fn):
        for opt in reversed(opts):
            fn = opt(fn)
        return fn

    return deco


@click.group()
@click.version_option(package_name="artifact")
def main():
    """Revenue-optimal lending under welfare-equalizing fairness constraints."""


@main.command("solve")
@_apply(population_opts + concept_opts + common_opts)
@click.option("--algorithm", type=click.Choice(["curve", "bisection"]), default="curve", show_default=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True, help="Output directory.")
@_handle_errors
def cmd_solve(population, example, concept, kind, eo_unnormalized, tol, algorithm, out_dir):
    """Solve for the optimal welfare-equalizing classifier.

    Writes classifier.csv, result.json and audit.json into OUT.
    """
    pop = _population(population, example)
    spec = _concept(concept, kind)
    u = make_utility(spec, pop, eo_unnormalized=eo_unnormalized)
    res = solve_we(pop, u) if algorithm == "curve" else solve_we_bisection(pop, u)
    report = audit(pop, u, res.classifier)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "classifier.csv", ["x", "a", "c"], [(x, a, _fmt(c)) for (x, a), c in zip(res.classifier.keys, res.classifier.values)])
    _write_json(out / "result.json", res.to_dict())
    _write_json(out / "audit.json", report.to_dict())

    click.echo(f"concept    {spec.kind} ({algorithm})")
    click.echo(f"revenue    {_fmt(res.revenue)}")
    click.echo(f"w*         {_fmt(res.w_star)}")
    click.echo(f"welfare    {_fmt(res.welfare[0])}  {_fmt(res.welfare[1])}")
    click.echo(f"lambda     {_fmt(res.lambdas[0])}  {_fmt(res.lambdas[1])}")
    status = "ok" if report.we_gap <= tol else "VIOLATED"
    click.echo(f"WE gap     {report.we_gap:.3g} ({status} at tol {tol:g})")


@main.command("curve")
@_apply(population_opts + concept_opts + common_opts[:1])
@click.option("--group", "-g", type=int, required=True, help="Protected group, 0 or 1.")
@click.option("--out", "out_csv", type=click.Path(dir_okay=False), required=True, help="Breakpoint CSV (w,R).")
@click.option("--out-objective", type=click.Path(dir_okay=False), help="Combined w,F CSV [default: <out>_objective.csv].")
@_handle_errors
def cmd_curve(population, example, concept, kind, eo_unnormalized, group, out_csv, out_objective):
    """Export a group's revenue-vs-welfare curve and the combined objective."""
    if group not in (0, 1):
        raise WEFairError(f"group must be 0 or 1, got {group}")
    pop = _population(population, example)
    u = make_utility(_concept(concept, kind), pop, eo_unnormalized=eo_unnormalized)
    curves = (welfare_curve(pop, u, 0), welfare_curve(pop, u, 1))
    cv = curves[group]
    _write_csv(Path(out_csv), ["w", "R"], [(_fmt(w), _fmt(R)) for w, R in cv.breakpoints()])
    w, F = objective_curve(pop, curves)
    obj = Path(out_objective) if out_objective else Path(out_csv).with_name(Path(out_csv).stem + "_objective.csv")
    _write_csv(obj, ["w", "F"], [(_fmt(a), _fmt(b)) for a, b in zip(w, F)])
    click.echo(f"group {group}: {len(cv.w)} breakpoints, w_max {_fmt(cv.w_max)}; objective has {len(w)} points")


def _optional(fn):
    try:
        return fn()
    except UndefinedConditional:
        return None


def compare_table(pop, measure, extra=None, *, eo_unnormalized=False) -> list[dict]:
    """Revenue, welfare and gap metrics of each policy, measured under ``measure``."""
    policies = [("unconstrained", solve_unconstrained(pop)[0]), ("unawareness", solve_unaware(pop)[0])]
    for name, spec in [("demographic_parity", ConceptSpec("demographic_parity")), ("equal_opportunity", ConceptSpec("equal_opportunity"))] + (
        [("custom", extra)] if extra is not None else []
    ):
        policies.append((name, solve_we(pop, make_utility(spec, pop, eo_unnormalized=eo_unnormalized)).classifier))
    base = revenue(pop, policies[0][1])
    rows = []
    for name, c in policies:
        rep = audit(pop, measure, c)
        rows.append(
            {
                "concept": name,
                "revenue": rep.revenue,
                "revenue_delta": rep.revenue - base,
                "welfare": list(rep.group_welfare),
                "approval_rate": [approval_rate(pop, c, g) for g in (0, 1)],
                "good_approval_rate": [_optional(lambda g=g: conditional_rate(pop, c, g, 1)) for g in (0, 1)],
                **{k: v for k, v in rep.to_dict().items() if k.endswith("_gap")},
            }
        )
    return rows


@main.command("compare")
@_apply(population_opts)
@click.option("--measure", type=click.Path(dir_okay=False), help="Concept JSON whose utility measures welfare.")
@click.option(
    "--measure-kind",
    type=click.Choice(["demographic_parity", "equal_opportunity", "repayment"]),
    help="Measurement utility by name.",
)
@click.option("--concept", "-c", type=click.Path(dir_okay=False), help="Extra concept JSON to add as a 'custom' row.")
@_apply(common_opts[:1])
@click.option("--out", "out_json", type=click.Path(dir_okay=False), required=True)
@_handle_errors
def cmd_compare(population, example, measure, measure_kind, concept, eo_unnormalized, out_json):
    """Compare unconstrained, unaware, DP, EO (and a custom concept)."""
    pop = _population(population, example)
    u = make_utility(_concept(measure, measure_kind), pop, eo_unnormalized=eo_unnormalized)
    extra = load_concept(concept) if concept else None
    rows = compare_table(pop, u, extra, eo_unnormalized=eo_unnormalized)
    _write_json(Path(out_json), {"rows": rows})
    click.echo(f"{'concept':<20}{'revenue':>12}{'W(0)':>12}{'W(1)':>12}")
    for row in rows:
        click.echo(f"{row['concept']:<20}{row['revenue']:>12.6g}{row['welfare'][0]:>12.6g}{row['welfare'][1]:>12.6g}")


# -- built-in reproductions -----------------------------------------------

def _check(lines, label, computed, expected, tol, op="=="):
    if op == "==":
        ok = abs(computed - expected) <= tol
    elif op == "<":
        ok = computed < expected - tol
    else:
        raise ValueError(op)
    lines.append((ok, f"{label}: computed {computed:.12g}, expected {op} {expected:.12g}"))
    return ok


def run_example(which: str, tol: float = 1e-9) -> list[tuple[bool, str]]:
    lines: list[tuple[bool, str]] = []
    if which == "ex1":
        pop = datasets.example1()
        c, rev = solve_unconstrained(pop)
        approved = sorted(k for k, v in c.as_dict().items() if v > 0)
        lines.append((approved == [("1", 1)], f"unconstrained approves {approved}, expected [('1', 1)]"))
        _check(lines, "unconstrained revenue", rev, 0.25, tol)
        res = solve_we(pop, make_utility("demographic_parity", pop))
        _check(lines, "WE(DP) revenue", res.revenue, 0.2, tol)
        res = solve_we(pop, make_utility(REPAYMENT, pop))
        _check(lines, "WE(u=y) revenue", res.revenue, 0.1, tol)
        _check(lines, "WE(u=y) w*", res.w_star, 0.3, tol)
    elif which == "unaware":
        for t in (0.55, 0.6, 0.65):
            pop = datasets.unawareness_example(t)
            c, rev = solve_unaware(pop)
            _check(lines, f"t={t} unaware revenue", rev, 0.0, 0.0)
            lines.append((bool(np.all(c.values == 0)), f"t={t} unaware classifier is identically 0"))
            for name, spec in [("DP", "demographic_parity"), ("EO", "equal_opportunity"), ("u=y", REPAYMENT)]:
                w = welfare_pair(pop, make_utility(spec, pop), c)
                _check(lines, f"t={t} unaware welfare {name}", max(w), 0.0, 0.0)
            _, rev_unc = solve_unconstrained(pop)
            lines.append((rev_unc > 0, f"t={t} unconstrained revenue {rev_unc:.6g} > 0"))
    elif which == "dp_harm":
        pop = datasets.dp_harm_example()
        c_unc, _ = solve_unconstrained(pop)
        res = solve_we(pop, make_utility("demographic_parity", pop))
        c = res.classifier
        _check(lines, "sum_x c_DP(x, 0)", sum(c[(x, 0)] for x in "012"), 1.0, tol)
        _check(lines, "unconstrained good-borrower approval in group 0", conditional_rate(pop, c_unc, 0, 1), 6 / 7, tol)
        _check(lines, "DP good-borrower approval in group 0", conditional_rate(pop, c, 0, 1), 6 / 7, tol, op="<")
        same = np.allclose(c.values[pop.a == 1], c_unc.values[pop.a == 1], atol=tol)
        lines.append((bool(same), "group 1 classifier unchanged by DP"))
    elif which == "eo_harm":
        pop = datasets.eo_harm_example(0.7)
        ones = make_utility("demographic_parity", pop)
        c_unc, _ = solve_unconstrained(pop)
        w_unc = welfare_pair(pop, ones, c_unc)
        _check(lines, "unconstrained W(0), u = 1", w_unc[0], 2 / 3, tol)
        _check(lines, "unconstrained W(1), u = 1", w_unc[1], 1 / 3, tol)
        res = solve_we(pop, make_utility("equal_opportunity", pop))
        _check(lines, "EO W(1), u = 1", welfare_pair(pop, ones, res.classifier)[1], 2 / 7, tol)
        _check(lines, "EO c(0, 1)", res.classifier[("0", 1)], 6 / 7, tol)
    else:
        raise ValueError(f"unknown example {which!r}")
    return lines


@main.command("examples")
@click.argument("which", type=click.Choice(["ex1", "unaware", "dp_harm", "eo_harm", "all"]), default="all")
@click.option("--tol", type=float, default=1e-9, show_default=True)
def cmd_examples(which, tol):
    """Recompute the built-in worked examples and compare with known values."""
    names = ["ex1", "unaware", "dp_harm", "eo_harm"] if which == "all" else [which]
    failed = 0
    for name in names:
        for ok, msg in run_example(name, tol):
            failed += not ok
            click.echo(f"{'PASS' if ok else 'FAIL'} [{name}] {msg}")
    if failed:
        click.echo(f"{failed} check(s) failed", err=True)
        sys.exit(3)


@main.command("ingest")
@click.argument("samples_csv", type=click.Path(dir_okay=False))
@click.argument("alpha_file", type=click.Path(dir_okay=False))
@click.option("--out", "out_json", type=click.Path(dir_okay=False), required=True)
@_handle_errors
def cmd_ingest(samples_csv, alpha_file, out_json):
    """Build a population JSON from a weighted samples CSV and an alpha table."""
    rows = read_samples_csv(samples_csv)
    pop = from_samples(rows, load_alpha_table(alpha_file))
    dump_population(pop, out_json)
    click.echo(f"wrote {len(pop)} cells, group mass {pop.group_mass[0]:.6g} / {pop.group_mass[1]:.6g}")


@main.command("selfcheck")
@click.option("--n", "n_instances", type=int, default=200, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--tol", type=float, default=1e-9, show_default=True)
def cmd_selfcheck(n_instances, seed, tol):
    """Run the welfare guarantee and solver agreement on random instances."""
    rng = np.random.default_rng(seed)
    failures = 0
    for i in range(n_instances):
        pop = datasets.random_population(rng)
        kind = datasets.UTILITY_KINDS[i % len(datasets.UTILITY_KINDS)]
        u = datasets.random_utility(rng, pop, kind)
        res = solve_we(pop, u)
        chk = check_theorem1(pop, u, tol, result=res)
        alt = solve_we_bisection(pop, u)
        ok = chk.welfare_ok and chk.pointwise_ok and abs(res.revenue - alt.revenue) <= tol
        if not ok:
            failures += 1
            click.echo(f"FAIL instance {i} ({kind})")
    click.echo(f"{n_instances - failures}/{n_instances} instances passed (seed {seed})")
    if failures:
        sys.exit(3)


if __name__ == "__main__":
    main()
