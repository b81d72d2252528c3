"""Olufsen pressure-area constitutive law."""

from dataclasses import dataclass

import numpy as np

from hemo_gnn.errors import DomainError


@dataclass(frozen=True)
class WallModel:
    """Wall-law constants k1 (barye), k2 (1/cm), k3 (barye)."""

    k1: float = 0.0
    k2: float = 0.0
    k3: float = 1.0e9

    def stiffness(self, r0):
        """4/3 (k1 exp(k2 r0) + k3), elementwise for array radii."""
        value = 4.0 / 3.0 * (self.k1 * np.exp(self.k2 * np.asarray(r0, dtype=float)) + self.k3)
        if np.any(value <= 0):
            raise DomainError("Wall stiffness must be positive")
        return value


def wall_pressure(wall: WallModel, A, A0, r0, p0):
    """p = p0 + 4/3 (k1 e^{k2 r0} + k3) (1 - sqrt(A0 / A)).

    Accepts scalars or arrays; returns the same shape.
    """
    A = np.asarray(A, dtype=float)
    A0 = np.asarray(A0, dtype=float)
    if np.any(A <= 0) or np.any(A0 <= 0):
        raise DomainError("Lumen areas must be positive")
    result = p0 + wall.stiffness(r0) * (1.0 - np.sqrt(A0 / A))
    return result.item() if result.ndim == 0 else result


def wall_area(wall: WallModel, p, A0, r0, p0):
    """Inverse of wall_pressure: the area at which the wall law yields p."""
    ratio = 1.0 - (np.asarray(p, dtype=float) - p0) / wall.stiffness(r0)
    if np.any(ratio <= 0):
        raise DomainError("Pressure exceeds the range representable by the wall law")
    result = np.asarray(A0, dtype=float) / ratio ** 2
    return result.item() if result.ndim == 0 else result
