"""Shared verdict and ground-truth label enumerations."""

from __future__ import annotations

from enum import Enum


class Verdict(str, Enum):
    """One agent's decision for one paper."""

    INCLUDE = "INCLUDE"
    DISCARD = "DISCARD"
    AMBIGUOUS = "AMBIGUOUS"
    ERROR = "ERROR"


class Label(str, Enum):
    """Human ground-truth classification of a paper."""

    INCLUDED = "INCLUDED"
    DISCARDED = "DISCARDED"
