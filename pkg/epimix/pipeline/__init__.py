"""Per-country evaluation graph."""
