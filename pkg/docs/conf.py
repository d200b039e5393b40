# Configuration file for the Sphinx documentation builder.
#
# For the full list of built-in configuration values, see the documentation:
# https://www.sphinx-doc.org/en/master/usage/configuration.html

# -- Project information -----------------------------------------------------
# https://www.sphinx-doc.org/en/master/usage/configuration.html#project-information
from __future__ import annotations

import os
import sys
from typing import TYPE_CHECKING

from sphinx.ext.intersphinx import missing_reference

if TYPE_CHECKING:
    from docutils import nodes
    from docutils.nodes import TextElement
    from sphinx.addnodes import pending_xref
    from sphinx.application import Sphinx
    from sphinx.environment import BuildEnvironment

# -- Path setup --------------------------------------------------------------

sys.path.insert(0, os.path.abspath('..'))

from poiseuille2d import version

# -- General configuration ---------------------------------------------------
# https://www.sphinx-doc.org/en/master/usage/configuration.html#general-configuration
author = 'poiseuille2d developers'
project = 'poiseuille2d'
package = project
copyright = f'2025, {author}'
release = version

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.intersphinx',
    'sphinx.ext.mathjax',
    'sphinx.ext.napoleon',
    'sphinx_copybutton',
    'sphinx_inline_tabs',
    'sphinx_autodoc_typehints',
]

templates_path = ['_templates']
exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']


# -- Extensions configuration ------------------------------------------------
# Nitpick configuration
nitpicky = True
nitpick_ignore = [
    # construct does not document `Container` which is an `OrderedDict`.
    ('py:class', 'construct.lib.containers.Container'),
    # numpy.typing aliases are not part of the numpy inventory.
    ('py:class', 'NDArray'),
    ('py:class', 'numpy.float64'),
    ('py:class', 'numpy.complex128'),
]

# Napoleon settings
napoleon_preprocess_types = True
napoleon_use_admonition_for_notes = True

# Autodoc
autodoc_default_options = {
    'show-inheritance': True,
    'member-order': 'bysource',
    'exclude-members': '__new__,__init__',
}
autodoc_class_signature = 'separated'
autoclass_content = 'class'

# Sphinx autodoc typehints
always_use_bars_union = True
typehints_defaults = 'comma'
typehints_use_signature = True
typehints_use_signature_return = True
typehints_use_rtype = False

# InterSphinx
intersphinx_mapping = {
    'construct': ('https://construct.readthedocs.io/en/latest', None),
    'numpy': ('https://numpy.org/doc/stable', None),
    'python': ('https://docs.python.org/3', None),
    'scipy': ('https://docs.scipy.org/doc/scipy', None),
}
# Map of known types that get badly requested to be a class.
_reftype_fixmap = {
    'typing.Self': 'obj',
    'typing.TypeAlias': 'obj',
}


# -- Options for HTML output -------------------------------------------------
# https://www.sphinx-doc.org/en/master/usage/configuration.html#options-for-html-output

html_theme = 'furo'
html_theme_options = {
    'source_directory': 'docs/',
    'light_css_variables': {
        'color-brand-primary': '#306998',
        'color-brand-content': '#0b487a',
    },
    'dark_css_variables': {
        'color-brand-primary': '#ffd43bcc',
        'color-brand-content': '#ffd43bd9',
    },
    'top_of_page_buttons': ['view'],
}
html_copy_source = False
html_show_sourcelink = True
html_show_sphinx = False


def custom_missing_reference(
    app: Sphinx,
    env: BuildEnvironment,
    node: pending_xref,
    contnode: TextElement,
) -> nodes.reference | None:
    """Fix references that are known not to exist."""
    reftarget = node['reftarget']

    newtype = _reftype_fixmap.get(reftarget)
    if newtype is not None:
        node['reftype'] = newtype

    if isinstance(reftarget, str) and reftarget.startswith(f'{package}.'):
        domain = env.domains[node['refdomain']]
        refdoc = node.setdefault('refdoc', env.docname)
        return domain.resolve_xref(
            env,
            refdoc,
            app.builder,
            node['reftype'],
            reftarget,
            node,
            contnode,
        )
    return missing_reference(app, env, node, contnode)


def setup(app: Sphinx) -> None:
    """Add a custom method for missing references."""
    app.connect('missing-reference', custom_missing_reference)
