# -*- coding: utf-8 -*-
#
# pybellaudit documentation build configuration file.
#
# This file is execfile()d with the current directory set to its
# containing dir.

import pybellaudit

# -- General configuration ------------------------------------------------

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.mathjax',
    'sphinx.ext.viewcode',
    'numpydoc',
    'sphinx.ext.autosummary',
    'sphinx.ext.doctest',
    'sphinx.ext.intersphinx',
]

# generate autosummary even if no references
autosummary_generate = True
numpydoc_show_class_members = False

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = u'pybellaudit'
copyright = u'2026, the pybellaudit developers'
author = u'the pybellaudit developers'

version = pybellaudit.__version__
release = pybellaudit.__version__

language = 'en'
exclude_patterns = ['_build']
pygments_style = 'sphinx'
todo_include_todos = False

# -- Options for HTML output ----------------------------------------------

html_theme = 'sphinx_rtd_theme'
html_static_path = ['_static']
htmlhelp_basename = 'pybellauditdoc'

# -- Options for manual page output ---------------------------------------

man_pages = [
    ('cli', 'bellaudit', u'audit Bell-type experiments', [author], 1)
]

intersphinx_mapping = {
    'python': ('https://docs.python.org/3', None),
    'numpy': ('https://numpy.org/devdocs', None),
    'scipy': ('https://scipy.github.io/devdocs', None),
    'pandas': ('https://pandas.pydata.org/docs', None),
}
