"""kwlab: numerical checks for gauge-theory equations behind knot invariants.

Submodules are imported on first access (``kwlab.fields`` etc.), so the CLI
can cap BLAS/OpenMP threads before numpy loads.
"""

from __future__ import annotations

import importlib

__version__ = "0.1.0"

__all__ = ["liealg", "fields", "solutions", "residuals", "weitzenbock", "morse", "hecke", "jones", "cli",
           "__version__"]


def __getattr__(name):
    if name in __all__ and name != "__version__":
        return importlib.import_module(f".{name}", __name__)
    raise AttributeError(f"module 'kwlab' has no attribute {name!r}")
