"""Output file collection."""
