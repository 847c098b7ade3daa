"""Finding the local unitary that relates two purifications.

If two states have the same reduced density matrix on the complement of a
region, their amplitude matrices satisfy ``f1^H f1 = f2^H f2`` and some
unitary ``U`` acting on the region alone maps ``f1`` to ``f2``.

Run with ``python3 demos/03_unitary_completion.py``.
"""

import numpy as np
from scipy.stats import unitary_group

from lightcone_rdm import check_rdm_equal, complete_unitary, embed_in_fock
from lightcone_rdm.local_unitary import amplitude_matrix

# the hand example: one column, swapped rows
c = complete_unitary(np.array([[1.0], [0.0]]), np.array([[0.0], [1.0]]), rng=np.random.default_rng(0))
print("2x1 swap:", c.path_taken, "rank", c.rank)
print(np.round(c.unitary, 12))

# a three-qutrit state rotated on the first factor
rng = np.random.default_rng(1)
dims = (3, 3, 3)
psi1 = rng.normal(size=27) + 1j * rng.normal(size=27)
psi1 /= np.linalg.norm(psi1)
psi2 = embed_in_fock(unitary_group.rvs(3, random_state=rng), dims, (0,)) @ psi1
f1, f2 = amplitude_matrix(psi1, dims, (0,)), amplitude_matrix(psi2, dims, (0,))
print("\nreduced states on the other factors agree:", check_rdm_equal(f1, f2))
c = complete_unitary(f1, f2)
back = embed_in_fock(c.unitary, dims, (0,)) @ psi1
print(f"path {c.path_taken}, |U psi1 - psi2| = {np.max(np.abs(back - psi2)):.1e}")
