class CapExceeded(RuntimeError):
    """A desk-scale cap (stages, spacing height, search horizon) would be exceeded."""
