"""Package for the long-tailed class-incremental learning toolkit."""
