"""Exact inversion of polynomial maps F = Id + H over the rationals."""
