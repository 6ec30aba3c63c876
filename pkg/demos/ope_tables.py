"""Walk through the contraction tables for n=2, N=3.

Prints each transcribed product next to the factor computed from the
oscillator contraction, and marks the rows where they differ.
"""
from qtoroidal.cartan import AlgebraParams
from qtoroidal.ope import check_lemma_tables

params = AlgebraParams(2, 3)
rows = check_lemma_tables(params)
bad = 0
for e in rows:
    if e["status"] == "PASS":
        continue
    bad += 1
    inst = ", ".join(f"{k}={v}" for k, v in e["instance"].items() if k != "n")
    print(f"DIFF {e['relation']} [{inst}]")
    print("     computed:", e.get("computed"))
    print("     table:   ", e["expected"])
print(f"{len(rows) - bad} of {len(rows)} table entries reproduced")
