# -*- coding: utf-8 -*-
#
# Sphinx configuration of the specreg documentation.

# -- Path setup --------------------------------------------------------------

import os
import sys
import pkg_resources

source_dir = os.path.dirname(__file__)
sys.path.insert(0, os.path.abspath(os.path.join(source_dir, '..', 'src')))

# -- Project information -----------------------------------------------------

project = 'specreg'
copyright = '2024, specreg developers'
author = 'specreg developers'

try:
    release = pkg_resources.get_distribution('specreg').version
except pkg_resources.DistributionNotFound:
    print('Package "specreg" must be installed to build docs.')
    sys.exit(1)
version = '.'.join(release.split('.')[:2])


# -- General configuration ---------------------------------------------------

extensions = [
    'sphinxcontrib.autoprogram',
    'sphinx.ext.autodoc',
    'sphinx.ext.mathjax',
    'sphinx.ext.napoleon',
    'sphinx_autodoc_typehints',
]

# docstrings follow the numpydoc convention
napoleon_google_docstring = False

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'
language = None
exclude_patterns = ['build']
pygments_style = 'sphinx'
autoclass_content = 'both'
typehints_fully_qualified = True


# -- Options for HTML output -------------------------------------------------

html_theme = 'sphinx_rtd_theme'
html_static_path = ['_static']
htmlhelp_basename = 'specregdoc'


# -- Options for other builders ----------------------------------------------

latex_documents = [
    (master_doc, 'specreg.tex', 'specreg Documentation', author, 'manual'),
]

man_pages = [
    (master_doc, 'specreg', 'specreg Documentation', [author], 1)
]
