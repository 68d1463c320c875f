"""Service wrapper: pydantic wire models, handlers and the FastAPI app."""
