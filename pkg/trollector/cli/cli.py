"""The entry point of the ``trollector`` command.

Sub-commands are also added here.

Examples
--------
.. code-block:: bash

    trollector --help
    trollector run --help
"""
import click

from trollector import __version__
from trollector.cli.run import run, batch, verify
from trollector.cli.debug import solve_once, fit_plane, pnp
from trollector.cli.calibrate import calibrate


SUB_COMMAND_GROUP = [
    ("Mission", ["run", "batch", "verify"]),
    ("Debugging", ["solve-once", "fit-plane", "pnp"]),
    ("Utilities", ["calibrate"]),
]


class GroupSubCommandHelpMsg(click.Group):
    """List sub-commands under their group headings in the help message."""
    def _rows(self, ctx, names, limit):
        rows = []
        for name in names:
            cmd = self.get_command(ctx, name)
            if cmd is not None and not cmd.hidden:
                rows.append((name, cmd.get_short_help_str(limit)))
        return rows

    def format_commands(self, ctx, formatter):
        commands = self.list_commands(ctx)
        limit = formatter.width - 6 - max(len(name) for name in commands)

        grouped = set()
        for title, names in SUB_COMMAND_GROUP:
            grouped.update(names)
            with formatter.section(title):
                formatter.write_dl(self._rows(ctx, names, limit))

        others = self._rows(ctx, [name for name in commands if name not in grouped], limit)
        if others:
            with formatter.section("Others"):
                formatter.write_dl(others)


@click.group(cls=GroupSubCommandHelpMsg)
@click.version_option(__version__, prog_name="trollector")
def entry():
    pass


entry.add_command(run)
entry.add_command(batch)
entry.add_command(verify)
entry.add_command(solve_once)
entry.add_command(fit_plane)
entry.add_command(pnp)
entry.add_command(calibrate)
