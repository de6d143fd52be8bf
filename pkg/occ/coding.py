"""
Line coding for the LED transmitter.

Differential Manchester: every bit boundary carries a transition, and a
mid-bit transition marks a 0. Runs of equal levels are therefore at most two
half-slots long, which leaves a run of three ON half-slots free to act as the
frame header.
"""

from typing import List, Sequence, Tuple

from .models import Payload

ON = 1
OFF = 0

HalfSlots = Tuple[int, ...]

HEADER: HalfSlots = (ON, ON, ON)


class CodingError(ValueError):
    """Raised for payloads or slot sequences that cannot be coded."""


def encode_diff_manchester(payload: Payload, initial_level: int = OFF) -> HalfSlots:
    """
    Encode a payload into half-slots.

    Args:
        payload: Bits to send
        initial_level: Line level just before the first bit

    Returns:
        2 * len(payload) half-slot levels
    """
    if not payload.bits:
        raise CodingError("empty payload")
    if initial_level not in (ON, OFF):
        raise CodingError(f"invalid line level: {initial_level}")

    slots: List[int] = []
    level = initial_level
    for bit in payload.bits:
        level ^= 1
        slots.append(level)
        if bit == 0:
            level ^= 1
        slots.append(level)
    return tuple(slots)


def decode_diff_manchester(slots: Sequence[int]) -> Payload:
    """Recover the payload; a bit is 1 when both halves of its slot pair agree."""
    if len(slots) < 2 or len(slots) % 2:
        raise CodingError("misaligned slots")
    bits = tuple(int(slots[i] == slots[i + 1]) for i in range(0, len(slots), 2))
    return Payload(bits=bits)


def build_frame(payload: Payload) -> HalfSlots:
    """Header followed by the payload, which starts OFF so the header run stays at three."""
    return HEADER + encode_diff_manchester(payload, initial_level=ON)


def runs_of(slots: Sequence[int]) -> List[Tuple[int, int, int]]:
    """Maximal runs as (level, start, length)."""
    runs: List[Tuple[int, int, int]] = []
    start = 0
    for i in range(1, len(slots) + 1):
        if i == len(slots) or slots[i] != slots[start]:
            runs.append((int(slots[start]), start, i - start))
            start = i
    return runs


def find_headers(slots: Sequence[int]) -> List[int]:
    """
    Start indices of headers.

    A header is the trailing three slots of an ON run of length three or
    more: payload runs never exceed two, but in a cyclic stream a payload that
    ends ON extends the header run on its left.
    """
    return [start + length - len(HEADER)
            for level, start, length in runs_of(slots)
            if level == ON and length >= len(HEADER)]

