"""CLI Corpus Package."""
