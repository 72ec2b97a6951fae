"""Named target/design presets for reproducible runs and tests."""

from __future__ import annotations

import re

import numpy as np

from .errors import ConfigError
from .grid import Grid, ScalarField

_PARABOLIC = re.compile(r"^parabolic\(\s*([-+0-9.eE]+)\s*\)$")


def preset_field(grid: Grid, name: str, role: str = "target") -> ScalarField:
    """Build a named preset on ``grid``.

    * ``zero`` - the flat shape,
    * ``parabolic(a)`` - a * s (2 - s) / 2, constant curvature a,
    * ``quarter-turn`` - smooth ramp (pi/2) s^2 (3 - 2 s) to a quarter turn
      with zero slope at both ends.
    """
    s = grid.nodes
    name = name.strip()
    if name == "zero":
        vals = np.zeros_like(s)
    elif name == "quarter-turn":
        vals = 0.5 * np.pi * s * s * (3.0 - 2.0 * s)
    else:
        m = _PARABOLIC.match(name)
        if not m:
            raise ConfigError(
                f"unknown preset {name!r}; expected 'zero', 'parabolic(a)' or 'quarter-turn'"
            )
        try:
            a = float(m.group(1))
        except ValueError as exc:
            raise ConfigError(f"bad parabolic amplitude in preset {name!r}") from exc
        vals = 0.5 * a * s * (2.0 - s)
    return ScalarField(grid, vals, role)
