"""pylib: reusable Python library for fabsim.

Layers:
- atoms: small, side-effect free utilities
- units: single-responsibility simulation rules (no IO)
"""
