"""Common Package."""
