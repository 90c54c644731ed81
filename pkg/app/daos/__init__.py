"""File-backed persistence for datasets, checkpoints and run artifacts."""
