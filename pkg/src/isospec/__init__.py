"""Isospectral 2-step nilpotent groups, their solvable extensions and
sphere-type hypersurfaces: constructions and numerical certificates."""

__version__ = "0.1.0"
