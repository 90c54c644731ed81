"""Business services: numerics, data, scenarios, memory, model, training and metrics."""
