"""Excursion fractions of a field with a random amplitude.

X = xi * Y with Y a long-memory Gaussian field and xi independent. The
excursion fraction over a large window concentrates on Psi(u / xi), so its
law is that of a random variable rather than a point. For xi^2 ~ Levy(0, u^2)
that variable is uniform on [0, 1/2]; a constant xi gives a point mass.

Run: python3 demos/04_random_volatility.py
"""
from scipy.stats import norm

from excursionlab.limit_lab import run_random_volatility_experiment
from excursionlab.models import CovarianceModel

base = CovarianceModel("fgn_product", {"H": [0.6]})
window = {"extents": [4096.0]}

rep = run_random_volatility_experiment(base, 1.0, 1000, window, seed=5)
m = rep.extra["values_moments"]
print(f"Levy volatility: mean {m['mean']:.4f} (uniform: 0.25), "
      f"var {m['variance']:.5f} (uniform: {1 / 48:.5f}), KS {rep.extra['ks_distance']:.4f}")

rep = run_random_volatility_experiment(base, 1.0, 400, window, seed=5,
                                       xi={"kind": "constant", "c": 2.0})
print(f"constant c=2: mean {rep.extra['values_moments']['mean']:.4f}, "
      f"target Psi(1/2) = {norm.sf(0.5):.4f}, spread {rep.extra['std']:.4f}")
