"""Command-line interface for the skeleton discovery pipeline."""
__all__ = ["main", "inputs", "outputs", "orchestrator"]
