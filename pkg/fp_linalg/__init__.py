"""Prime Field Linear Algebra Package."""
