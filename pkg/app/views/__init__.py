"""Command line views for the experiment harness."""
