"""
Physical parameters of the coupled problem.
"""

from dataclasses import dataclass
import logging

from django.core.exceptions import ValidationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PhysicalParams:
    """Fluid density and viscosity, solid density and neo-Hookean modulus"""
    rho_f: float
    mu_f: float
    rho_s: float
    c1: float

    def __post_init__(self):
        errors = {}
        if not self.rho_f > 0.0:
            errors['rho_f'] = "Fluid density must be positive"
        if not self.mu_f >= 0.0:
            errors['mu_f'] = "Viscosity must be non-negative"
        if not self.rho_s > 0.0:
            errors['rho_s'] = "Solid density must be positive"
        if not self.c1 >= 0.0:
            errors['c1'] = "Elastic modulus c1 must be non-negative"
        if errors:
            raise ValidationError(errors)
        if self.rho_delta < 0.0:
            logger.warning(
                "Solid lighter than fluid (rho_delta=%g); the energy estimate "
                "no longer applies", self.rho_delta,
            )

    def __str__(self):
        return (f"rho_f={self.rho_f:g} mu_f={self.mu_f:g} "
                f"rho_s={self.rho_s:g} c1={self.c1:g}")

    @property
    def rho_delta(self):
        return self.rho_s - self.rho_f
