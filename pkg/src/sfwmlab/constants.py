"""Physical constants (SI 2019 exact values) and package-wide defaults."""

C_VACUUM = 299792458.0        # speed of light, m/s
PLANCK_H = 6.62607015e-34     # Planck constant, J s
BOLTZMANN_K = 1.380649e-23    # Boltzmann constant, J/K

# Default RNG seed for simulations; always echoed in output metadata and
# overridable from the CLI.
DEFAULT_SEED = 1549315

# Counter-based generator used for every stochastic operation.
RNG_ALGORITHM = "philox4x64"
