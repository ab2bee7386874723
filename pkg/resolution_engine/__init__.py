"""Resolution Engine Package."""
