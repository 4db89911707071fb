"""
Static steady states of the Vlasov-Poisson, Nordstrom-Vlasov and spherically
symmetric Einstein-Vlasov systems, with numerical checks of their virial
identities and mass-energy and redshift inequalities.
"""

from .ansatz import AnsatzProfile, MomentSet, brute_force_moment, moments
from .config import ConfigError, RunConfig, load_config
from .einstein_vlasov import (EVInvariants, EVSolution, build_ev_static,
                              ev_bounds_report, ev_consistency_residual,
                              ev_invariants, ev_virial_residual)
from .nordstrom_vlasov import (LorentzInvariants, NVSolution, build_nv_static,
                               center_of_momentum_velocity,
                               lorentz_boost_invariants, make_chi_R,
                               nv_chi_functional, nv_invariants, nv_report,
                               nv_static_virial_residual)
from .numerics import DEFAULT_TOL, Tolerances
from .report import Check, VirialReport
from .scan import ScanResult, ScanRow, emit, run_from_config, scan_sequence
from .vlasov_poisson import (GalileanInvariants, VPSolution, build_vp_polytrope,
                             galilean_boost, vp_invariants, vp_report)

__version__ = "0.1.0"
