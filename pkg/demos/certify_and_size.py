"""
Certifying recoverability and sizing a study
============================================

The solver side of the library answers "what did this dataset give me";
the theory side answers two design questions up front:

1. does a concrete dictionary matrix admit exact l1 recovery of all
   s-sparse coefficient vectors (the null space property), and
2. how many samples does a dependence regime need before recovery
   guarantees kick in.

Runs in a few seconds.
"""

import numpy as np

from robustfit.datagen import CorruptionSpec, build_dataset, make_polynomial
from robustfit.dictionary import build_dictionary
from robustfit.theory import (
    KappaSpec,
    check_kappa_condition,
    min_samples_kappa,
    min_samples_nsp,
    nsp_check,
)

# --- certify a small dictionary -------------------------------------------
# quadratic dictionary in two variables (6 columns) on only 4 samples, so
# the kernel is nontrivial and the certificate has something to measure
truth = make_polynomial({(0, 0): 1.0}, dim=2, max_degree=2)
ds = build_dataset(truth, m=4, generator="alpha_mixing",
                   corruption=CorruptionSpec(sparsity=0), seed=3)
phi = build_dictionary(ds.U, max_degree=2)

for s in (1, 2):
    rep = nsp_check(phi.values, s)
    verdict = "holds" if rep.nsp_holds else "fails"
    print(f"order {s}: worst kernel mass ratio {rep.alpha_max:.4f} "
          f"on columns {[int(j) for j in rep.worst_set]} -> property {verdict}")

# a flat matrix cannot satisfy the property: [1 1] splits its kernel evenly
rep = nsp_check(np.array([[1.0, 1.0]]), 1)
print(f"degenerate 1x2 check: ratio {rep.alpha_max} (needs < 0.5)")

# --- size a study ----------------------------------------------------------
# smallest m whose concentration exponent dominates 3 delta r log m
spec = KappaSpec("iid", {"C2": 1.0, "C3": 1.0})
delta, r = 0.1, 56
m_min = min_samples_kappa(spec, delta, r)
print(f"\niid regime, delta={delta}, r={r}: need m >= {m_min}")
print(f"condition at m=100:   {check_kappa_condition(spec, delta, r, 100)}")
print(f"condition at m={m_min}: {check_kappa_condition(spec, delta, r, m_min)}")

# worst-case sample bound for exact recovery with corruption
m_exact = min_samples_nsp(B_X=1.0, B_Theta=1.0, s=5, D=0.5, delta=0.25, p=5)
print(f"exact-recovery bound (bounded data, 5 outliers, degree 5): m > {m_exact}")
