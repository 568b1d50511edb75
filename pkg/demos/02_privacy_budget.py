"""How the identification risk translates into epsilon and noise scales.

A tolerated risk p_dire and the number of participants fix epsilon.  Each
aggregated variable then gets Laplace noise with scale sensitivity/epsilon:
1 for counts, Q_e for positions and phi times the previous red for times.
"""

from privsignal import Sensitivity, epsilon_bound, laplace_scale
from privsignal.errors import NonPositiveBudget


def cell(p, n):
    try:
        return f"{epsilon_bound(p, n):8.3f}"
    except NonPositiveBudget:
        return f"{'none':>8}"  # too few participants to hide anyone at this risk

print("epsilon for p_dire x participants")
print("p_dire  " + "".join(f"{n:>8d}" for n in (10, 20, 50, 100)))
for p in (0.01, 0.05, 0.1):
    print(f"{p:<7} " + "".join(cell(p, n) for n in (10, 20, 50, 100)))

print("\nposition-sum noise scale with Q_e = 8 and 50 participants:")
for p in (0.01, 0.05, 0.1):
    print(f"  p_dire={p}: b = {laplace_scale(8.0, epsilon_bound(p, 50)).b:.2f}")

s = Sensitivity(q_e=8.0, phi=1.0, r_k=45.0)
print(f"\nafter a 45 s red, the time-sum sensitivity is {s.delta_t:.0f} s")
