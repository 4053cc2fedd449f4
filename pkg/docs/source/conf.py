# Configuration file for the Sphinx documentation builder.
#
# This file only contains a selection of the most common options. For a full
# list see the documentation:
# https://www.sphinx-doc.org/en/master/usage/configuration.html

# -- Path setup --------------------------------------------------------------

import os
import sys
sys.path.insert(0, os.path.abspath('../..'))


# -- Project information -----------------------------------------------------

project = 'trollector'
copyright = '2026, Trollector developers'
author = 'Trollector developers'

# The full version, including alpha/beta/rc tags
release = '0.1.0'


# -- General configuration ---------------------------------------------------

extensions = [
    'numpydoc',
    'sphinx_click',
    'sphinx.ext.autosectionlabel'
]

numpydoc_show_inherited_class_members = False

templates_path = ['_templates']

exclude_patterns = ['tests/*']

pygments_style = 'sphinx'


# -- Options for HTML output -------------------------------------------------

html_theme = 'press'

source_suffix = ['.py', '.rst']

master_doc = 'index'
