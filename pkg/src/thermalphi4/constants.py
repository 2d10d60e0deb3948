"""Physical constants (CODATA 2018 via :mod:`scipy.constants`) and ion species."""

from __future__ import annotations

from dataclasses import dataclass

from scipy import constants as _sc

from .errors import ConfigError

HBAR = _sc.hbar
KB = _sc.k
EPS0 = _sc.epsilon_0
E_CHARGE = _sc.e
AMU = _sc.atomic_mass
M_E = _sc.m_e


@dataclass(frozen=True)
class IonSpecies:
    name: str
    mass: float  # kg
    charge: float  # elementary charges


# singly ionised 40Ca: neutral atomic mass (AME2020) minus one electron
SPECIES = {
    "Ca40": IonSpecies("Ca40", 39.962590851 * AMU - M_E, 1.0),
}


def species(name: str) -> IonSpecies:
    key = name.replace("+", "").replace("-", "").replace("_", "")
    for k, v in SPECIES.items():
        if k.lower() == key.lower() or key.lower() == ("40" + k[:-2]).lower():
            return v
    raise ConfigError(f"unknown ion species {name!r}; known: {sorted(SPECIES)}")
