"""Squeezing controlled homotopy equivalences into triangular ones."""
