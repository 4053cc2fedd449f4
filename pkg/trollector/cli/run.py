# pylint: disable=C0303,W1401
import os
import sys

import click

from trollector.cli import load_scenario
from trollector.cli.common_options import add_common_options, COMMON_RUN_OPTIONS
from trollector.utils import LazyLoader, get_filename


runner = LazyLoader("runner", globals(), "trollector.runner")
verifier = LazyLoader("verifier", globals(), "trollector.verify")


def _default_out(scenario):
    return os.path.join("runs", get_filename(scenario))


@click.command()
@add_common_options(COMMON_RUN_OPTIONS)
@click.option("--verify", "verify_logs", is_flag=True, help="Re-check every barrier constraint on the written logs.")
def run(scenario, seed, out, ticks_max, verify_logs):
    """Run one closed-loop trolley collection mission in the simulator.

    Writes trajectory.csv, ticks.jsonl and metrics.json into the output folder.
    Exits with 0 when the mission is done, 1 on a configuration error, 2 when
    the mission aborts or hits the tick limit, and 3 when the log check finds a
    barrier violation.

    \b
    Example Usage
    $ trollector run \\
        --scenario demo_fig8 \\
        --seed 0 \\
        --out runs/demo \\
        --verify
    """
    settings = load_scenario(scenario)
    out = _default_out(scenario) if out is None else out
    result = runner.run_mission(settings, out_dir=out, seed=seed, ticks_max=ticks_max, verify=verify_logs)

    metrics = result.metrics
    click.echo(f"Outcome: {result.outcome} after {metrics['ticks']} ticks ({metrics['duration']:.1f} s)")
    if metrics["abort_reason"] is not None:
        click.echo(f"Abort reason: {metrics['abort_reason']}")
    click.echo(f"Output folder: {out}")
    if verify_logs and not metrics["verify"]["ok"]:
        click.echo(f"Verification failed with {len(metrics['verify']['violations'])} violation(s)", err=True)
        sys.exit(runner.EXIT_VERIFY_FAILED)
    sys.exit(result.exit_code)


@click.command()
@click.option("-n", "--num-runs", help="Number of randomised missions.", type=int, default=50, show_default=True)
@click.option(
    "-o", "--out", help="Folder for the runs and summary.json.", default="./runs/batch", show_default=True,
    type=click.Path(file_okay=False, writable=True)
)
@click.option("--seed", help="Seed of the first run; run i uses seed + i.", type=int, default=0, show_default=True)
@click.option(
    "-w", "--num-workers", help="Number of parallel worker processes.", type=int, default=2, show_default=True
)
@click.option("-s", "--scenario", help="Base scenario the random worlds are merged over.")
def batch(num_runs, out, seed, num_workers, scenario):
    """Run randomised missions with 3 to 8 static obstacles in parallel.

    Every run is verified from its logs. Exits with 3 when any run violates a
    barrier constraint.

    \b
    Example Usage
    $ trollector batch \\
        --num-runs 50 \\
        --num-workers 4 \\
        --out runs/batch
    """
    base = None
    if scenario is not None:
        base = load_scenario(scenario).source
    summary = runner.run_batch(num_runs, out, seed=seed, max_workers=num_workers, base_scenario=base)
    click.echo(f"Done: {summary['done']}, aborted: {summary['aborted']}, with violations: {summary['violations']}")
    if summary["violations"] > 0:
        sys.exit(runner.EXIT_VERIFY_FAILED)


@click.command()
@click.argument("path", type=click.Path(exists=True))
@click.option("--tol", help="Allowed negative barrier value.", type=float, default=1e-6, show_default=True)
def verify(path, tol):
    """Re-evaluate the barrier constraints of a run folder or a solution JSON.

    Exits with 3 on any violation.
    """
    report = verifier.verify(path, tol=tol)
    click.echo(
        f"Checked {report.checked_ticks} tick(s) and {report.checked_steps} planned step(s): "
        f"{len(report.violations)} violation(s)"
    )
    for violation in report.violations[:20]:
        click.echo(f"  {violation}")
    if not report.ok:
        sys.exit(runner.EXIT_VERIFY_FAILED)


def process_doc():
    # Some dirty work for preserving and converting the docstring inside the decorated
    # function into .rst format.
    doc = run.__doc__
    doc = doc.replace("\b", "").replace("    ", "").replace("--", "        --")

    code_block = "\n.. code-block:: bash\n\n"
    doc = doc.replace("$", f"{code_block}    $")

    return doc


__doc__ = process_doc()
