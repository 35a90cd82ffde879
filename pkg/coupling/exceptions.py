# coupling/exceptions.py


class TransferError(ValueError):
    """A transfer function between populations breaks the coupling rules."""
