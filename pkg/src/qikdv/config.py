"""Central numerical constants and tolerances.

Library defaults and the acceptance suite both read from here so they cannot drift apart.
"""

from dataclasses import dataclass

import numpy as np

E = float(np.e)
SQRT2 = float(np.sqrt(2.0))
C_GAUGE = 1.0 / (SQRT2 * E)  # 1/(sqrt(2) e), the recurring prefactor of the gauge system


@dataclass(frozen=True)
class Tolerances:
    riccati_blowup: float = 1e8
    u_floor: float = 1e-12
    grade_window: tuple = (-2, 8)
    gauge_substeps: int = 4
    soliton_transport: float = 1e-6
    scaled_transport: float = 1e-5
    dual_path: float = 1e-10
    conservation_rel: float = 1e-6
    lambda_zero: float = 1e-12
    first_order_anomaly_factor: float = 5.0
    first_order_exponent: tuple = (1.8, 2.2)
    quasi_continuity: float = 1e-4
    rate_rel: float = 1e-3
    nls_slope: float = 3.5
    coupled_reduction: float = 1e-8


TOL = Tolerances()


@dataclass(frozen=True)
class SolverDefaults:
    length: float = 40.0
    n: int = 512
    dt: float = 1e-4
    t_end: float = 1.0
    # Empirical IF-RK4 stability constant for dt <= C (L/n)^3 is irrelevant here:
    # the dispersive term is integrated exactly, so only the nonlinear CFL matters.
    sample_every: int = 100


DEFAULTS = SolverDefaults()
