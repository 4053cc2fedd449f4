"""Constant settings.

Settings that should not be modified within the scope of this project.
There are two categories of the setting:

* ``Frames``: axis conventions, stream ids and log columns.
* ``Schema``: json schemas of the scenario settings.

"""
