"""Graded Algebra Package."""
