# Sphinx configuration for the Hierax API reference.
# Rebuild with ./regenerate_docs.sh from the repository root.

import os
import sys

sys.path.insert(0, os.path.abspath("../.."))

from hierax import __version__  # noqa: E402

project = "Hierax"
copyright = "2026, Shane Vigil"
author = "Shane Vigil"
release = __version__
version = ".".join(__version__.split(".")[:2])

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.napoleon",  # Google-style Args/Returns/Raises sections
    "sphinx.ext.viewcode",
]

autodoc_default_options = {
    "members": True,
    "member-order": "bysource",
    "show-inheritance": True,
}
autodoc_mock_imports = ["rapidfuzz", "jsonschema"]
napoleon_google_docstring = True
napoleon_numpy_docstring = False

master_doc = "index"
templates_path = ["_templates"]
exclude_patterns = []

html_theme = "sphinx_rtd_theme"
html_static_path = ["_static"]
html_title = f"Hierax {release}"
