"""Adaptive ultraweak DPG solver for planar viscoelastic channel flow."""

__version__ = "0.1.0"
