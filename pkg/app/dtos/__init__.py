"""Data transfer objects shared across the toolkit layers."""
