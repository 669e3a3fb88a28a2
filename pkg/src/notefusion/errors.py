class DataError(ValueError):
    """Input data failed validation (bad file, bad row, violated precondition)."""
