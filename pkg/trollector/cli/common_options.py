import click


def add_common_options(options):
    def add_options(func):
        for option in reversed(options):
            func = option(func)
        return func
    return add_options


COMMON_SCENARIO_OPTIONS = [
    click.option(
        "-s",
        "--scenario",
        help="Path to a scenario file, or the name of a shipped scenario.",
        default="demo_fig8",
        show_default=True
    ),
    click.option("--seed", help="Override the seed of the scenario.", type=int),
]


COMMON_RUN_OPTIONS = COMMON_SCENARIO_OPTIONS + [
    click.option(
        "-o",
        "--out",
        help="Folder for the run artifacts. Default to ./runs/<scenario name>.",
        type=click.Path(file_okay=False, writable=True)
    ),
    click.option("--ticks-max", help="Override the tick limit of the scenario.", type=int),
]


COMMON_OUTPUT_OPTIONS = [
    click.option(
        "-o",
        "--output",
        help="Path of the output JSON file. Printed to stdout when not given.",
        type=click.Path(dir_okay=False, writable=True)
    )
]
