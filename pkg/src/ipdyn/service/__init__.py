"""FastAPI service wrapping the core package; the CLI is a thin client of
the same handlers."""
