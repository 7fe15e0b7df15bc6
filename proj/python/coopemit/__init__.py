"""Steady-state cooperative enhancement of driven two-level emitter ensembles."""

from ._coopemit import *  # noqa: F401,F403
from ._coopemit import __doc__  # noqa: F401


def sweep(mode="separation_sweep", **fields):
    """Run a sweep from keyword arguments named after SweepSpec fields.

    Enum fields accept their names, e.g. ``tier_policy="exact"``.
    """
    from . import _coopemit as core

    enums = {"mode": core.SweepMode, "tier_policy": core.TierPolicy, "convention": core.SeparationConvention}
    spec = core.SweepSpec()
    for key, value in dict(fields, mode=mode).items():
        if not hasattr(spec, key):
            raise TypeError(f"unknown sweep field {key!r}")
        if key in enums and isinstance(value, str):
            value = enums[key].__members__[value]
        setattr(spec, key, value)
    return core.run_sweep(spec)
