"""
KANFED - Federated Kolmogorov-Arnold Networks

Spline-edge networks trained across simulated clients, with scheduled grid
extension and uploads sparsified to a per-round bit budget.
"""

__version__ = "0.1.0"
