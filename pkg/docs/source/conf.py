# -*- coding: utf-8 -*-
#
# SweepTool documentation build configuration file.
#
# Only the values that differ from the Sphinx defaults are set here.

import sys
import os

# Make the package importable without installing it.
sys.path.insert(0, os.path.abspath('../..'))

from sweeptool._version import __version__

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.intersphinx',
    'sphinx.ext.mathjax',
    'numpydoc',
]

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = u'SweepTool'
copyright = u'2026, the SweepTool developers'

# The short X.Y version.
version = '.'.join(__version__.split('.')[:2])
# The full version, including alpha/beta/rc tags.
release = __version__

exclude_patterns = []
pygments_style = 'sphinx'

html_theme = 'default'
html_static_path = ['_static']
htmlhelp_basename = 'SweepTooldoc'

latex_documents = [
    ('index', 'SweepTool.tex', u'SweepTool Documentation',
     u'SweepTool developers', 'manual'),
]

man_pages = [
    ('index', 'sweeptool', u'SweepTool Documentation',
     [u'SweepTool developers'], 1)
]

numpydoc_show_class_members = False

intersphinx_mapping = {'python': ('https://docs.python.org/3', None),
                       'numpy': ('https://numpy.org/doc/stable', None),
                       'astropy': ('https://docs.astropy.org/en/stable', None)}
