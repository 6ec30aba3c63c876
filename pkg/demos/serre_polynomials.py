"""Check the three-variable antisymmetrization identities behind the Serre relations."""
from qtoroidal.verifier import check_serre_polynomial

for e in check_serre_polynomial():
    print(e["status"], e["instance"]["branch"])
