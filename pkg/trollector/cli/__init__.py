"""Command line interface of `trollector`
"""
import sys

import click


EXIT_CONFIG_ERROR = 1


def load_scenario(scenario):
    """Load the scenario settings, or exit with code 1 and the anchored message.

    Configuration errors are the only errors the end users should see without a
    traceback, therefore this function is defined here for CLI only.
    """
    # pylint: disable=C0415
    from trollector.setting_loaders import ScenarioSettings
    from trollector.exceptions import ConfigurationError

    try:
        return ScenarioSettings(scenario)
    except ConfigurationError as err:
        click.echo(f"Error: {err}", err=True)
        sys.exit(EXIT_CONFIG_ERROR)


def echo_json(obj, output=None):
    """Write the object to ``output`` as JSON, or print it when no path is given."""
    # pylint: disable=C0415
    import json
    from trollector.io import to_builtin, write_json

    if output is None:
        click.echo(json.dumps(to_builtin(obj), indent=2, sort_keys=True))
    else:
        write_json(obj, output)
        click.echo(f"Output file as: {output}")
