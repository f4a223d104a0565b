"""The cohomological clock: how long can the background stay positive?

The background family is omega_hat(t) = omega_0 - t * chi, blockwise.  The
flow cannot outlive the first time a block mean loses positivity; that
time has a closed form through a whitened generalized eigenvalue problem.
This script evaluates the closed form on a hand-checkable model, compares
it against a bisection scan, and shows the three regimes: finite horizon,
infinite horizon, and immediate degeneration.
"""

import numpy as np

from twistedma import max_existence_time
from twistedma.forms import CohomologyClassRep

# hand-checkable: plus block 1 - 2t dies at t = 1/2, minus block 1 + t never
rep0 = CohomologyClassRep(np.array([[1.0]]), np.array([[1.0]]))
chi = CohomologyClassRep(np.array([[2.0]]), np.array([[-1.0]]))
tau = max_existence_time(rep0, chi)
print(f"((1,1),(2,-1)) model: tau_star = {tau} (expected exactly 0.5)")

# negative-definite chi only adds positivity: infinite horizon
chi_neg = CohomologyClassRep(np.array([[-1.0]]), np.array([[-3.0]]))
print(f"negative chi: tau_star = {max_existence_time(rep0, chi_neg)}")

# independent bisection check on a random 2x2 Hermitian model
rng = np.random.default_rng(5)
A = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
omega = A @ A.conj().T + 0.1 * np.eye(2)
B = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
H = B + B.conj().T
rep = CohomologyClassRep(omega, np.eye(2))
ch = CohomologyClassRep(H, np.zeros((2, 2)))
tau = max_existence_time(rep, ch)


def positive(t):
    return np.linalg.eigvalsh(omega - t * H).min() > 0


lo, hi = 0.0, 1.0
while positive(hi):
    hi *= 2
while hi - lo > 1e-12:
    mid = 0.5 * (lo + hi)
    lo, hi = (mid, hi) if positive(mid) else (lo, mid)
print(f"random 2x2 model: closed form {tau:.12f}, bisection {lo:.12f}")
