"""Numerical laboratory for the KdV long-wave limit of ion-acoustic plasma models."""

__version__ = "0.1.0"
