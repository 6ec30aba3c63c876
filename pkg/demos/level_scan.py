"""Scan the argument shift in the [x+, x-] relation.

Only the shift theta = 1/4, which corresponds to gamma = q^(-1/2), should
make the informative instances agree.
"""
from qtoroidal.verifier import context_from_config, level_witness, normalize_config, verify_pm_commutator

cfg = normalize_config({"n": 2, "N": 3, "truncation": 2, "window": "-2..2"})
ctx = context_from_config(cfg)
entries = verify_pm_commutator(ctx, forms=("generating",))
w = level_witness(entries)
for k, v in w.items():
    print(f"{k}: {v}")
