"""Chart IO Package."""
