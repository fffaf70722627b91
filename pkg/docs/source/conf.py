#!/usr/bin/env python3
# -*- coding: utf-8 -*-
#
# Build with
#
#   sphinx-build -b html -a -E docs/source docs/build/html

import fraclap


extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.intersphinx',
    'sphinx.ext.autosectionlabel',
    'sphinx.ext.mathjax',
    'sphinx_autodoc_typehints',
    'sphinx_copybutton',
]

intersphinx_mapping = {
    'python': ('https://docs.python.org/3', None),
    'numpy': ('https://numpy.org/doc/stable', None),
    'scipy': ('https://docs.scipy.org/doc/scipy', None),
}
autodoc_class_signature = 'separated'
autodoc_default_options = {
    'members': True,
    'member-order': 'bysource',
    'show-inheritance': True,
    'exclude-members': '__weakref__',
}
# Section titles repeat across pages ("Quadrature", "Errors")
autosectionlabel_prefix_document = True
typehints_defaults = 'comma'
copybutton_prompt_text = r">>> |\.\.\. "
copybutton_prompt_is_regexp = True

source_suffix = '.rst'
master_doc = 'index'

project = 'fraclap'
author = 'fraclap developers'
version = fraclap.__version__
release = version
language = 'en'

exclude_patterns = []

html_show_copyright = False
html_show_sphinx = False
html_copy_source = False
html_title = 'fraclap documentation'
html_theme = 'alabaster'
