"""Configuration helpers for the experiment harness."""
