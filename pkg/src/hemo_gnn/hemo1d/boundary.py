"""Outlet boundary conditions: Windkessel (RCR) and pure resistance.

The distal pressure is taken as zero. The outlet pressure follows the
circuit convention P = P_c + R_p Q, which reduces to P = R Q when C and
R_d vanish.
"""

import math
from dataclasses import dataclass
from enum import Enum

from hemo_gnn.errors import ContractError, DomainError


class BcMode(str, Enum):
    RCR = "rcr"
    RESISTANCE = "resistance"


@dataclass(frozen=True)
class RcrParams:
    """Three-element Windkessel parameters of one outlet.

    Attributes:
        Rp: Proximal resistance (barye s / cm^3)
        C: Capacitance (cm^3 / barye)
        Rd: Distal resistance (barye s / cm^3)
        mode: rcr or resistance; resistance mode stores C = Rd = 0 and R = Rp
    """

    Rp: float
    C: float = 0.0
    Rd: float = 0.0
    mode: BcMode = BcMode.RCR

    def __post_init__(self):
        object.__setattr__(self, "mode", BcMode(self.mode))
        if self.Rp < 0:
            raise DomainError(f"Proximal resistance must be non-negative, got {self.Rp}")
        if self.mode is BcMode.RCR:
            if self.C <= 0 or self.Rd <= 0:
                raise DomainError(f"RCR outlets need C > 0 and Rd > 0, got C={self.C}, Rd={self.Rd}")
        else:
            object.__setattr__(self, "C", 0.0)
            object.__setattr__(self, "Rd", 0.0)

    @classmethod
    def resistance(cls, R: float) -> "RcrParams":
        return cls(Rp=R, mode=BcMode.RESISTANCE)

    @property
    def total_resistance(self) -> float:
        return self.Rp + self.Rd

    def scaled(self, factor: float) -> "RcrParams":
        """Scale every parameter of the group by one factor."""
        if self.mode is BcMode.RESISTANCE:
            return RcrParams.resistance(self.Rp * factor)
        return RcrParams(Rp=self.Rp * factor, C=self.C * factor, Rd=self.Rd * factor)

    def to_dict(self) -> dict:
        return {"Rp": self.Rp, "C": self.C, "Rd": self.Rd, "mode": self.mode.value}


def poiseuille_resistance(mu: float, L: float, r: float) -> float:
    """Resistance of a rigid tube under Poiseuille flow: 8 mu L / (pi r^4)."""
    if mu <= 0 or L <= 0 or r <= 0:
        raise DomainError(f"Poiseuille resistance needs positive mu, L, r (got {mu}, {L}, {r})")
    return 8.0 * mu * L / (math.pi * r ** 4)


def rcr_update(bc: RcrParams, Pc: float, Q: float, dt: float) -> float:
    """Advance the capacitor pressure one implicit Euler step.

    Solves dPc/dt = (Q - Pc / Rd) / C, giving
    Pc' = (Pc + dt Q / C) / (1 + dt / (Rd C)).
    """
    if bc.mode is not BcMode.RCR:
        raise ContractError("rcr_update is undefined for resistance outlets, use outlet_pressure")
    if dt <= 0:
        raise DomainError(f"Time step must be positive, got {dt}")
    return (Pc + dt * Q / bc.C) / (1.0 + dt / (bc.Rd * bc.C))


def outlet_pressure(bc: RcrParams, Pc: float, Q: float) -> float:
    """Pressure at the outlet node for the given capacitor pressure and flow."""
    if bc.mode is BcMode.RESISTANCE:
        return bc.Rp * Q
    return Pc + bc.Rp * Q
