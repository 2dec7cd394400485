# hierax/__init__.py
"""
Hierax: hierarchical reasoning, symbol elimination and interpolation in
local theory extensions.
"""
__version__ = "0.1.0"
