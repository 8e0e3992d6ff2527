"""Tour of the complex-Gaussian parameterizations and the m-projection.

A complex Gaussian can be described by natural parameters (theta, Theta) or
by moments (mu, M); the two are Legendre transforms of each other.  The
m-projection onto the manifold of independent Gaussians is the KL-optimal
diagonal approximation and simply keeps the mean and per-coordinate
variances.  Everything else in this package iterates that one primitive.
"""

import numpy as np

from igachan import (
    DiagGaussian,
    GaussianNatural,
    expectation_to_natural,
    kl_divergence,
    m_project_to_diag,
    natural_to_expectation,
)

rng = np.random.default_rng(0)

# a random correlated 4-dimensional complex Gaussian in natural form
n = 4
B = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
precision = B @ B.conj().T + n * np.eye(n)
theta = rng.standard_normal(n) + 1j * rng.standard_normal(n)
p = GaussianNatural(theta, -precision)

e = natural_to_expectation(p)
print("mean:", np.round(e.mu, 3))
print("covariance diagonal:", np.round(np.real(np.diag(e.Sigma)), 4))

back = expectation_to_natural(e)
print("round-trip error:",
      np.abs(back.theta - p.theta).max() + np.abs(back.Theta - p.Theta).max())

# the m-projection keeps the mean and the variances, nothing else
proj = m_project_to_diag(p)
print("\nprojected mean matches:", np.abs(proj.mean - e.mu).max())
print("projected variances match diag(Sigma):",
      np.abs(proj.variance - np.real(np.diag(e.Sigma))).max())

# and it is the KL-closest independent Gaussian: nudging any coordinate
# of the projection only increases the divergence
base = kl_divergence(p, proj.as_natural())
nudged = DiagGaussian(proj.lam, proj.Lam * 1.02)
print("\nKL at the projection: %.6f" % base)
print("KL after nudging precisions by 2%%: %.6f" % kl_divergence(p, nudged.as_natural()))

# closed-form sanity check: scalar CN(0,1) against CN(0,2)
p1 = GaussianNatural(np.zeros(1), -np.eye(1))
p0 = GaussianNatural(np.zeros(1), -0.5 * np.eye(1))
print("\nscalar KL CN(0,1) || CN(0,2): %.6f  (log 2 - 1/2 = %.6f)"
      % (kl_divergence(p1, p0), np.log(2) - 0.5))
