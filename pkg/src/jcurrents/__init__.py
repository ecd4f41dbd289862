"""Numerical exterior calculus and currents on almost complex manifolds."""
from .algebra import ExteriorValue, wedge
from .calculus import FormField, ddbar_field, dbar_field, del_field, split_d
from .currents import IntegrationCurrent, SmoothCurrent, graph_chart, mass, tube_limit, tube_mass
from .errors import JCurrentsError
from .geometry import Box
from .janalytic import (Stratification, generic_lelong, integration_current,
                        restriction_check, validate)
from .lelong import coord_invariance, lelong_number, nu, nu_bar
from .plelong import DefiningMap, kappa, ma_log_pairing, model_constant, pl_limit, remainder
from .quadrature import QuadratureConfig, integrate
from .structures import adapted_chart, make_standard, make_twisted, nijenhuis_norm
from .testforms import make_test_form, positive_probe

__version__ = "0.1.0"
