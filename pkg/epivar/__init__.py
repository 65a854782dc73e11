"""epivar - numerical second-order variational calculus for decomposable functions.

A decomposable function is phi(x) = phi(xbar) + sigma_Q(F(x)) near xbar, with Q a
closed convex set and F a C2 map with F(xbar) = 0. The package computes and
empirically checks subdifferentials, (strict) second subderivatives, proximity
operators, constraint qualifications, strict-saddle and strong-metric-regularity
certificates, and cone-reduction / uniform tangent-path machinery.

Run it via the root launcher ``python epv.py`` or the ``epivar`` console script.
The package __init__ stays import-light so the launcher can bootstrap numpy/scipy
before any submodule needs them.
"""

__version__ = "0.1.0"
