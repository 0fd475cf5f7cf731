"""Physical constants and pipeline configuration."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

from .errors import ConfigError

# Boltzmann constant expressed as a wavenumber per kelvin.
KB_CM1 = 0.695034800
# h*c in erg*cm: multiplies a wavenumber (cm^-1) to give erg.
HC_ERG_CM = 1.986445857e-16
AMU_G = 1.66053907e-24
ANGSTROM2_CM2 = 1e-16
# H2O + H2 reduced mass in atomic mass units.
MU_H2O_H2 = 1.81277

MISSING_REVERSE_POLICIES = ("one-sided", "require-both")
MISSING_FINAL_POLICIES = ("flag", "strict")
MISSING_INITIAL_POLICIES = ("error", "renormalize", "substitute-highest", "zero")

DEFAULT_TEMPERATURES = (20.0, 50.0, 100.0, 200.0, 300.0, 500.0,
                        700.0, 1000.0, 1500.0, 2000.0)


@dataclass(frozen=True)
class PhysicalConstants:
    k_B: float = KB_CM1
    hc: float = HC_ERG_CM
    amu: float = AMU_G
    angstrom2: float = ANGSTROM2_CM2

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not (isinstance(value, (int, float)) and value > 0 and math.isfinite(value)):
                raise ConfigError(f"constant {f.name} must be positive and finite, got {value!r}")

    @property
    def k_B_erg(self) -> float:
        """Boltzmann constant in erg/K."""
        return self.k_B * self.hc


@dataclass(frozen=True)
class PipelineConfig:
    """Everything the rate pipeline needs besides the data files.

    ``projectile_j2`` restricts which initial projectile levels enter a
    thermal average; ``None`` means every level of the requested symmetry.
    """

    constants: PhysicalConstants = field(default_factory=PhysicalConstants)
    mu: float = MU_H2O_H2
    quad_rtol: float = 1e-6
    max_refinements: int = 30
    weight_floor: float = 1e-4
    missing_reverse: str = "one-sided"
    missing_final: str = "flag"
    missing_initial: str = "error"
    temperatures: tuple = DEFAULT_TEMPERATURES
    projectile_j2: tuple | None = None

    def __post_init__(self):
        if not (self.mu > 0 and math.isfinite(self.mu)):
            raise ConfigError(f"reduced mass must be positive, got {self.mu!r}")
        for name in ("quad_rtol", "weight_floor"):
            value = getattr(self, name)
            if not 0 < value < 1:
                raise ConfigError(f"{name} must lie in (0, 1), got {value!r}")
        if int(self.max_refinements) != self.max_refinements or self.max_refinements < 1:
            raise ConfigError(f"max_refinements must be a positive integer, got {self.max_refinements!r}")
        _check_choice("missing_reverse", self.missing_reverse, MISSING_REVERSE_POLICIES)
        _check_choice("missing_final", self.missing_final, MISSING_FINAL_POLICIES)
        _check_choice("missing_initial", self.missing_initial, MISSING_INITIAL_POLICIES)
        temps = tuple(float(t) for t in self.temperatures)
        check_temperature_grid(temps)
        object.__setattr__(self, "temperatures", temps)
        if self.projectile_j2 is not None:
            j2 = tuple(int(j) for j in self.projectile_j2)
            if any(j < 0 for j in j2) or len(set(j2)) != len(j2):
                raise ConfigError(f"projectile_j2 must be distinct non-negative integers, got {j2}")
            object.__setattr__(self, "projectile_j2", tuple(sorted(j2)))

    @property
    def k_B(self) -> float:
        return self.constants.k_B

    def with_updates(self, **changes) -> "PipelineConfig":
        return replace(self, **changes)


def check_temperature_grid(temps):
    if len(temps) == 0:
        raise ConfigError("temperature grid is empty")
    for t in temps:
        if not (t > 0 and math.isfinite(t)):
            raise ConfigError(f"temperatures must be positive and finite, got {t!r}")
    for a, b in zip(temps, temps[1:]):
        if not b > a:
            raise ConfigError(f"temperature grid must be strictly increasing ({a} then {b})")


def _check_choice(name, value, choices):
    if value not in choices:
        raise ConfigError(f"{name} must be one of {', '.join(choices)}; got {value!r}")
