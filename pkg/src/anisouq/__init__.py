"""Data-driven eigenspace perturbation of RANS Reynolds stresses.

Submodules
----------
tensor        symmetric tensors, eigen-decomposition, barycentric map
perturb       eigenvalue/eigenvector perturbation and moderation
features      rotation-invariant feature basis and standardization
dataset       flow-field records, interpolation, training targets
forest        random-forest regression written from scratch
extrapolation kernel-density extrapolation distance
channel       1-D channel surrogate for uncertainty propagation
synthetic     channel-like test fields
"""
__version__ = "0.1.0"
