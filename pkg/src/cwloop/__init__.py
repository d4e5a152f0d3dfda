"""Condenser water loop optimization toolkit.

Pipeline: a physics reference simulator of the condenser water loop
(chillers + cooling tower + constant-volume pumps) generates synthetic
operating data; a gradient-boosted tree surrogate learns the plant's
power behavior; a mixed-integer particle swarm optimizer finds the
condenser water supply temperature and tower fan stage that minimize
loop power or tariff cost. Results are exposed as a CLI, a look-up
table generator, and an HTTP advisory service.
"""

__version__ = "0.1.0"

from cwloop.errors import CwloopError

__all__ = ["CwloopError", "__version__"]
