"""avgcase: average-case reductions from planted graph problems to sparse
Gaussian mixtures, semirandom community recovery and universal sparse-mixture
families, together with the statistical harness that verifies every
distributional contract those reductions are supposed to satisfy.

Submodules
----------
prob       seeded streams, scalar distribution specs, normal CDF/quantile
graphs     graph types, planted samplers, adversaries, GRAPHv1 I/O
geometry   incidence rotation matrices from hyperplanes of F_r^t
kernels    rejection kernels (Gaussian, entrywise, symmetric 3-ary)
pipelines  the end-to-end reductions and the parameter planner
verify     exact/empirical distances, closed-form bounds, Fourier energy,
           reduction verification batteries
formats    AMATv1 matrices and canonical JSON documents
cli        the ``avgcase`` command-line front end
"""

from . import errors, formats, geometry, graphs, kernels, pipelines, prob, verify

__version__ = "0.1.0"

__all__ = [
    "errors",
    "formats",
    "geometry",
    "graphs",
    "kernels",
    "pipelines",
    "prob",
    "verify",
    "__version__",
]
