# Configuration file for the Sphinx documentation builder.

# -- Path setup --------------------------------------------------------------
import os
import sys
sys.path.insert(0, os.path.abspath('../..'))


# -- Project information -----------------------------------------------------
project = 'pta_unet'
release = '0.1.0'


# -- General configuration ---------------------------------------------------
import sphinx_rtd_theme
extensions = ['sphinx.ext.napoleon', 'sphinx.ext.autodoc', 'sphinx.ext.doctest', "sphinx_rtd_theme"]

templates_path = []
exclude_patterns = []
html_static_path = []


# -- Options for HTML output -------------------------------------------------
html_theme = "sphinx_rtd_theme"

autodoc_member_order = 'bysource' # Members in source order, not alphabetical
autodoc_default_options = {'members': None}
