"""
DAG-WGAN Studio
===============
Causal structure learning with an SCM autoencoder regularized by a
Wasserstein critic, under a continuous acyclicity constraint.
"""

__version__ = "1.0.0"
