"""
Numerical core of ProxRecon.

Import modules directly (``from src.core.solvers import run_gap``). This
package must not import its submodules: ``src.models`` imports
``src.core.errors`` while the numerics import ``src.models``.
"""
