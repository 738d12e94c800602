"""Prediction values shared by learners, experts and the protocol."""

ABSTAIN = -1


def label_str(y) -> str:
    """Trace encoding of a prediction or label: ``0``, ``1``, ``-`` for abstain, empty if unknown."""
    if y is None:
        return ""
    return "-" if y == ABSTAIN else str(int(y))


def parse_label(s: str):
    if s == "":
        return None
    return ABSTAIN if s == "-" else int(s)
