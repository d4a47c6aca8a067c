"""Hermite coefficients of excursion indicators and how the rank depends on f and u.

Run: python3 demos/01_hermite_rank.py
"""
from excursionlab.hermite_core import hermite_coefficients, hermite_rank
from excursionlab.models import Subordinator, two_branch_rank4

cases = [
    ("identity", Subordinator("identity"), 0.5),
    ("cubic beta=2", Subordinator("cubic", {"beta": 2}), 0.5),
    ("square", Subordinator("square"), 4.0),
    ("two-branch", two_branch_rank4(0.5), 0.5),
]

print(f"{'f':<14}{'u':>5}  rank  a_0 .. a_4")
for name, f, u in cases:
    a = hermite_coefficients(f, u, 1.0, 4)
    coeffs = " ".join(f"{x:+.4f}" for x in a)
    print(f"{name:<14}{u:>5}  {hermite_rank(f, u)!s:>4}  {coeffs}")

# An even subordinator kills every odd coefficient, so the square level set
# never has rank one. The two-branch function is tuned to cancel orders 1..3.
# A level below the range of f makes the indicator constant: no rank at all.
print("square, u=-1:", hermite_rank(Subordinator("square"), -1.0))
