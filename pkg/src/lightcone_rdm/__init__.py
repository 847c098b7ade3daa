"""Free scalar field on a periodic lattice: kernels, Gaussian states and causality checks."""

__version__ = "0.1.0"

from .errors import *  # noqa: E402,F401,F403
from .kernels import (  # noqa: E402
    LatticeSpec,
    KernelMatrix,
    build_kernel,
    mode_frequencies,
    verify_identity,
    lightcone_profile,
)
from .gaussian import (  # noqa: E402
    Region,
    GaussianState,
    ReducedDescriptor,
    vacuum,
    coherent,
    propagator,
    evolve,
    restrict,
    descriptor_distance,
    apply_local_displacement,
    apply_local_symplectic,
    find_local_gaussian_unitary,
)
from .superposition import Branch, CoherentSuperposition, cat_state, vacuum_witness  # noqa: E402
from .local_unitary import check_rdm_equal, complete_unitary, find_local_unitary, embed_in_fock  # noqa: E402
