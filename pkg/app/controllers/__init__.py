"""Controllers translating service outcomes into command exit codes."""
