"""Default numerical thresholds and grid parameters.

The regime thresholds bound where the corrector construction is used; they
are configurable because only their existence, not their values, is forced
by the analysis.  The defaults here are validated by the overlap cross-check
between the corrector path and the direct dense solve.
"""

GRID_N = 160
GRID_SCALE = 4.0
GRID_N_MAX = 1024

C2 = 0.05          # corrector path requires eps <= C2
DELTA_STAR = 0.5   # ... and eps * |alpha|^3 <= DELTA_STAR
C3 = 0.05          # lower eps threshold for the fixed-eps estimates
M2 = 8.0           # |alpha| >= M2 counts as the damped large-alpha regime
DELTA0_RATIO = 0.1  # Im z strip for the A0 ratio bounds

THETA0 = 0.05      # period threshold separating the small-theta regime
DELTA0_FREQ = 0.5  # |n/theta| <= DELTA0_FREQ * nu^{-3/4} is low frequency

N_MAX_MODES = 8    # default Fourier truncation of the nonlinear solver
