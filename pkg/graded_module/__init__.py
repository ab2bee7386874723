"""Graded Module Package."""
