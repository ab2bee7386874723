"""Twist Builder Package."""
