from __future__ import annotations

import csv
import json
import logging
import sys
from contextlib import contextmanager
from dataclasses import dataclass, fields, is_dataclass
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence, TextIO

import click
from vmodule import vmodule_init

from .blocks import DEFAULT_DEGREE_BOUND, DEFAULT_WORD_BOUND, extract_blocks, modified_block_to_gk
from .config import (
    dump_experiment_config,
    dump_spec,
    ExperimentConfig,
    lattice_for,
    load_block_input,
    load_experiment_config,
    load_group,
    parse_int_list,
)
from .cube import (
    check_cube_along_image,
    check_cube_independent,
    commuting_cube_family,
    conjugates,
    flat_check_elements,
    lamp_spacing,
    Method,
    sample_sublattice_elements,
    standard_delta_pair,
)
from .groups import Family, lamp
from .laurent import Context, parse, variables_in
from .runner import Runner, THREADS_ENV
from .spp import spp_certify_pair, Status
from .verify import run_checks
from .walks import (
    build_delta_pair_via_semigroup,
    CSV_COLUMNS,
    run_experiment,
    SWAP_CAP,
    swap_checks,
    SwapCheck,
)

LOG = logging.getLogger(__name__)

VERSION_PROJECT = "boundary-lab"
VERSION_DESC = "%(prog)s, version %(version)s"

EXIT_UNDECIDED = 2


@dataclass
class Settings:
    threads: int
    runner: Runner


class Group(click.Group):
    """
    Usage errors exit 1 like any other input error; 2 means "undecided".
    """

    def make_context(self, *args: Any, **kwargs: Any) -> click.Context:
        try:
            return super().make_context(*args, **kwargs)
        except click.UsageError as e:
            e.exit_code = 1
            raise

    def invoke(self, ctx: click.Context) -> Any:
        try:
            return super().invoke(ctx)
        except click.UsageError as e:
            e.exit_code = 1
            raise


@contextmanager
def library_errors() -> Iterator[None]:
    try:
        yield
    except (ValueError, ZeroDivisionError) as e:
        raise click.ClickException(str(e)) from None


def version_callback(ctx: click.Context, param: click.Parameter, value: bool) -> None:
    if not value or ctx.resilient_parsing:
        return
    import importlib.metadata

    version = importlib.metadata.version(VERSION_PROJECT)
    click.echo(
        VERSION_DESC % {"prog": VERSION_PROJECT, "version": version},
        color=ctx.color,
    )
    ctx.exit()


def echo_json(obj: Any, out: Optional[TextIO] = None) -> None:
    def default(o: Any) -> Any:
        if is_dataclass(o):
            return {k.name: getattr(o, k.name) for k in fields(o)}
        return str(o)

    text = json.dumps(obj, indent=2, default=default)
    if out is None:
        click.echo(text)
    else:
        out.write(text + "\n")


@click.group(cls=Group)
@click.pass_context
@click.option(
    "--version",
    callback=version_callback,
    is_flag=True,
    is_eager=True,
    expose_value=False,
)
@click.option("-v", type=int)
@click.option("--vmodule")
@click.option(
    "--threads",
    envvar=THREADS_ENV,
    type=int,
    default=1,
    show_default=True,
    help=f"Worker processes for searches and trials (falls back to {THREADS_ENV}).",
)
def main(
    ctx: click.Context,
    v: Optional[int],
    vmodule: Optional[str],
    threads: int,
) -> None:
    """
    Exact arithmetic and experiments for random walks on solvable matrix
    groups.  Exit status is 0 when a question is decided, 1 on bad input and
    2 when a search ended without deciding.
    """
    vmodule_init(v, vmodule)
    if threads < 1:
        raise click.UsageError(f"--threads must be positive, got {threads}")
    ctx.obj = Settings(threads=threads, runner=Runner(threads))
    LOG.info("Using settings %s", ctx.obj)


@main.command()
@click.pass_context
@click.option("--poly", required=True, help="Laurent polynomial, e.g. '1 + x1 - x2'")
@click.option("--vars", "var_names", help="Comma-separated variable order (default: names in --poly)")
@click.option("--N", "N", type=int, default=3, show_default=True, help="Power for the multivariate search")
@click.option("--box", type=int, help="Search cells 0..BOX in each used variable")
@click.option("--budget", type=int, default=3**9, show_default=True, help="Sign patterns to try when --box is absent")
def spp(
    ctx: click.Context,
    poly: str,
    var_names: Optional[str],
    N: int,
    box: Optional[int],
    budget: int,
) -> None:
    """
    Decide, refute, or search for the spaced polynomial property of POLY.
    """
    names = tuple(n.strip() for n in var_names.split(",")) if var_names else variables_in(poly)
    if not names:
        names = ("x1",)
    with library_errors():
        p = parse(poly, Context(names))
        verdict = spp_certify_pair(p, N, budget=budget, box=box, runner=ctx.obj.runner)
    echo_json(verdict.to_json())
    if verdict.status == Status.UNKNOWN:
        sys.exit(EXIT_UNDECIDED)


@main.command()
@click.pass_context
@click.option("--group", "group_name", required=True, help="Group config file or packaged name")
@click.option("--N", "N", type=int, help="Sublattice modulus for every projected coordinate")
@click.option("--lattice", help="Comma-separated sublattice moduli (0 or 1 leaves a coordinate free)")
@click.option("--k", type=int, default=8, show_default=True, help="Number of conjugating elements")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--method", type=click.Choice([m.value for m in Method]), default=Method.BRUTE_FORCE.value)
@click.option("--commuting", type=int, help="Check the n^k commuting family over {0, N, ..., N(n-1)}^k instead")
@click.option("--demo", type=click.Choice(["torsion"]), help="Run a known failing case")
def cube(
    ctx: click.Context,
    group_name: str,
    N: Optional[int],
    lattice: Optional[str],
    k: int,
    seed: int,
    method: str,
    commuting: Optional[int],
    demo: Optional[str],
) -> None:
    """
    Cube independence of the pair conjugated by sampled sublattice elements.
    """
    config = load_group(group_name)
    spec = config.spec
    out: Dict[str, Any] = {"group": spec.name}

    with library_errors():
        if demo == "torsion":
            if spec.family != Family.LAMPLIGHTER or not spec.lamp:
                raise click.UsageError("--demo torsion needs a lamplighter with a finite lamp group")
            # two lamps at one site: a torsion base forces repeated sites
            gamma = [lamp(spec, (0,) * spec.rank), lamp(spec, (0,) * spec.rank)]
            out.update(check_cube_independent(gamma, spec, seed=seed).to_json())
            echo_json(out)
            return

        if commuting is not None:
            family = commuting_cube_family(spec, commuting, N or 1)
            report = flat_check_elements(family.elements, spec)
            out.update(report.to_json())
            out["constant"] = family.constant
            echo_json(out)
            return

        override = parse_int_list(lattice, "lattice") if lattice else ((N,) if N else None)
        moduli = lattice_for(config, override)
        pair = standard_delta_pair(spec, config.homomorphism)
        h = sample_sublattice_elements(spec, moduli, k, seed, pair.projection)
        if method == Method.BRUTE_FORCE.value:
            report = check_cube_along_image(pair, h, spec, seed=seed)
        else:
            report = flat_check_elements(conjugates(pair, h, spec), spec)
        out["lattice"] = list(moduli)
        out.update(report.to_json())
        if spec.family == Family.LAMPLIGHTER:
            delta_bar = spec.multiply(spec.inverse(pair.delta1), pair.delta2)
            out["lamp_spacing"] = lamp_spacing(delta_bar, spec)
    echo_json(out)


def _write_rows(rows: Sequence[Dict[str, int]], f: TextIO) -> None:
    writer = csv.DictWriter(f, fieldnames=list(CSV_COLUMNS), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)


@main.command()
@click.pass_context
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="TOML experiment file")
@click.option("--group", "group_name", help="Group config file or packaged name")
@click.option("--n", "ns", help="Comma-separated step counts")
@click.option("--trials", type=int)
@click.option("--seed", type=int, help="Master seed (required here or in --config)")
@click.option("--csv", "csv_path", help="Write per-trial rows here instead of stdout")
@click.option("--json", "json_path", help="Write the per-n summary here")
@click.option("--lattice", help="Comma-separated sublattice moduli for fresh visits")
@click.option("--endpoint-entropy", is_flag=True, default=None, help="Also estimate endpoint entropy")
@click.option("--swap-check", is_flag=True, help="Check that swapping fresh delta steps gives distinct endpoints")
@click.option("--dump-config", is_flag=True, help="Print the merged experiment config and exit")
def walk(
    ctx: click.Context,
    config_path: Optional[str],
    group_name: Optional[str],
    ns: Optional[str],
    trials: Optional[int],
    seed: Optional[int],
    csv_path: Optional[str],
    json_path: Optional[str],
    lattice: Optional[str],
    endpoint_entropy: Optional[bool],
    swap_check: bool,
    dump_config: bool,
) -> None:
    """
    Sample trajectories and count fresh delta steps at each n.
    """
    base = load_experiment_config(config_path) if config_path else ExperimentConfig()
    exp = base.merged(
        group=group_name,
        n=parse_int_list(ns, "--n") if ns else None,
        trials=trials,
        seed=seed,
        csv=csv_path,
        json=json_path,
        lattice=parse_int_list(lattice, "lattice") if lattice else None,
        endpoint_entropy=endpoint_entropy,
    )
    if dump_config:
        click.echo(dump_experiment_config(exp), nl=False)
        return
    exp.validate()
    assert exp.group is not None and exp.seed is not None
    LOG.info("Using experiment %s", exp)

    config = load_group(exp.group)
    spec = config.spec
    moduli = lattice_for(config, exp.lattice)
    with library_errors():
        nu, pair = build_delta_pair_via_semigroup(
            config.step_law, spec, projection=config.homomorphism
        )
        result = run_experiment(
            spec,
            nu,
            exp.n,
            exp.trials,
            exp.seed,
            pair=pair,
            lattice=moduli,
            endpoint_entropy=exp.endpoint_entropy,
            runner=ctx.obj.runner,
        )
        swaps: List[SwapCheck] = []
        if swap_check:
            swaps = swap_checks(
                spec,
                nu,
                pair,
                min(exp.n),
                exp.trials,
                exp.seed,
                lattice=moduli,
                runner=ctx.obj.runner,
            )

    if exp.csv:
        with open(exp.csv, "w", newline="") as f:
            _write_rows(result.rows, f)
    else:
        _write_rows(result.rows, sys.stdout)

    summary: Dict[str, Any] = {
        "group": dump_spec(config),
        "measure": nu.to_json(),
        "lattice": list(moduli),
        "seed": exp.seed,
        "stats": [s.to_json() for s in result.stats],
    }
    if swap_check:
        summary["swap_checks"] = [s.to_json() for s in swaps]
        summary["swap_cap"] = SWAP_CAP
    if exp.json:
        with open(exp.json, "w") as f:
            echo_json(summary, f)
    elif exp.csv:
        echo_json(summary)


@main.command("verify-paper")
@click.pass_context
@click.option("--only", multiple=True, help="Run only checks with this name or prefix")
@click.option("--tamper", is_flag=True, hidden=True)
def verify_paper(ctx: click.Context, only: Sequence[str], tamper: bool) -> None:
    """
    Re-derive the exact identities and bounded searches the results rest on.
    """
    with library_errors():
        results = run_checks(only, runner=ctx.obj.runner, tamper=tamper)
    rv = 0
    for r in results:
        if r.success:
            status = click.style("PASS", fg="green")
        else:
            status = click.style("FAIL", fg="red")
            rv = 1
        click.echo(r.name.ljust(25) + status + "  " + r.message)
        if r.detail and (only or not r.success):
            click.echo("    " + r.detail)
    sys.exit(rv)


@main.command()
@click.option("--input", "input_name", required=True, help="Block input file or packaged name")
@click.option("--word-bound", type=int, default=DEFAULT_WORD_BOUND, show_default=True)
@click.option("--degree-bound", type=int, default=DEFAULT_DEGREE_BOUND, show_default=True)
def blocks(input_name: str, word_bound: int, degree_bound: int) -> None:
    """
    Find the valid blocks of a group given by upper triangular generators.
    """
    data = load_block_input(input_name)
    with library_errors():
        found = extract_blocks(data, word_bound, degree_bound)
        out = []
        for block in found:
            entry = block.to_json()
            if block.valid and block.lattice_rank:
                entry["ring"] = modified_block_to_gk(block).ring.describe()
            out.append(entry)
    echo_json({"input": Path(input_name).stem, "valid": sum(b.valid for b in found), "blocks": out})


if __name__ == "__main__":
    main()
